import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctsp.datum import gaussian, zero_datum
from ctsp.model import ModelParams, Zone
from ctsp.profiles import (MomentB0, ProfileKind, compute_b0, cutoff, kind_for,
                           moment_L11, moment_P, profile_hat, profile_values,
                           smooth_step)
from ctsp.solver import SpectralGrid


class TestCutoffs:
    def test_support_conditions(self):
        assert cutoff(Zone.INTERIOR, 0.0, 0.5, 2.0) == 1.0
        assert cutoff(Zone.EXTERIOR, 0.0, 0.5, 2.0) == 0.0
        assert cutoff(Zone.INTERIOR, 0.6, 0.5, 2.0) == 0.0
        assert cutoff(Zone.EXTERIOR, 4.5, 0.5, 2.0) == 1.0
        assert cutoff(Zone.INTERIOR, 0.24, 0.5, 2.0) == 1.0

    def test_partition_of_unity(self):
        r = np.logspace(-4, 4, 400)
        total = sum(cutoff(z, r, 0.5, 2.0) for z in Zone)
        assert np.abs(total - 1.0).max() <= 1e-14

    def test_strictly_between_in_transition(self):
        v = cutoff(Zone.INTERIOR, 0.9 * 0.5, 0.5, 2.0)
        assert 0.0 < v < 1.0

    def test_bounded_nonnegative(self):
        r = np.logspace(-3, 3, 500)
        assert np.all(cutoff(Zone.BOUNDED, r, 0.5, 2.0) >= -1e-15)

    def test_smooth_step_monotone(self):
        x = np.linspace(-0.5, 1.5, 200)
        s = smooth_step(x)
        assert np.all(np.diff(s) >= 0)

    def test_invalid_thresholds(self):
        with pytest.raises(ValueError):
            cutoff(Zone.INTERIOR, 0.1, 2.0, 0.5)


class TestKindSelection:
    @given(st.floats(0.0, 1.0))
    @settings(max_examples=60, deadline=None)
    def test_total_over_alpha(self, alpha):
        k = kind_for(alpha)
        if alpha < 0.5:
            assert k is ProfileKind.ANOMALOUS_DIFFUSION
        elif alpha > 0.5:
            assert k is ProfileKind.DIFFUSION_WAVE
        else:
            assert k is ProfileKind.CRITICAL_WAVE

    def test_kind_mismatch_rejected(self):
        p = ModelParams(tau=1.0, c0=1.0, b=0.5, nu=1.0, alpha=0.1)
        with pytest.raises(ValueError, match="does not match"):
            profile_hat(ProfileKind.DIFFUSION_WAVE, 0, 1.0, 0.1, p)


class TestProfileValues:
    def test_alpha_zero_is_gaussian_multiplier(self):
        # no singular prefactor at alpha = 0
        p = ModelParams(tau=1.0, c0=1.0, b=0.8, nu=1.0, alpha=0.0)
        r = 0.05
        got = profile_hat(ProfileKind.ANOMALOUS_DIFFUSION, 0, 10.0, r, p,
                          eps0=0.5, N0=2.0)
        expect = (1.0 / 0.8) * math.exp(-(1.0 / 0.8) * r**2 * 10.0)
        assert got.real == pytest.approx(expect, rel=1e-12)
        assert got.imag == 0.0

    def test_wave_sinc_limit(self):
        # sin(c0 r t)/(c0 r) -> t as t -> 0+
        p = ModelParams(tau=1.0, c0=1.0, b=0.5, nu=1.0, alpha=0.75)
        r, t = 0.05, 1e-7
        got = profile_hat(ProfileKind.DIFFUSION_WAVE, 0, t, r, p, eps0=0.5, N0=2.0)
        assert got.real == pytest.approx(t, rel=1e-6)

    def test_critical_first_derivative_formula(self):
        p = ModelParams(tau=1.0, c0=1.0, b=1.0, nu=1.0, alpha=0.5)
        r, t = 0.1, 3.0
        lam_i = 0.5 * math.sqrt(4.0 - 1.0) * r
        lam_r = -0.5 * r
        direct = (lam_i * math.cos(lam_i * t) + lam_r * math.sin(lam_i * t)) \
            * math.exp(lam_r * t) / lam_i
        got = profile_hat(ProfileKind.CRITICAL_WAVE, 1, t, r, p, eps0=0.5, N0=2.0)
        assert got.real == pytest.approx(direct, rel=1e-12)

    @pytest.mark.parametrize("alpha,kind", [
        (0.2, ProfileKind.ANOMALOUS_DIFFUSION),
        (0.5, ProfileKind.CRITICAL_WAVE),
    ])
    def test_derivative_vs_finite_difference(self, alpha, kind):
        # kinds 1 and 3 differentiate the whole multiplier, so successive j
        # are genuine time derivatives; in the diffusion-wave family the
        # derivative acts on the oscillation only (the envelope correction
        # is subdominant by |xi|^(2 alpha)) and is checked separately
        p = ModelParams(tau=1.0, c0=1.0, b=0.5, nu=1.0, alpha=alpha)
        r, t0 = 0.07, 4.0
        for j in (0, 1):
            errs = []
            for h in (1e-3, 5e-4):
                fd = (profile_hat(kind, j, t0 + h, r, p).real
                      - profile_hat(kind, j, t0 - h, r, p).real) / (2 * h)
                errs.append(abs(fd - profile_hat(kind, j + 1, t0, r, p).real))
            assert errs[1] <= errs[0] / 3.0 or errs[1] < 1e-13

    def test_diffusion_wave_derivative_hits_oscillation_only(self):
        # d_t of the full kind-2 multiplier equals the j+1 member plus the
        # envelope term; the j+1 member alone differentiates the sine
        p = ModelParams(tau=1.0, c0=1.0, b=0.5, nu=1.0, alpha=0.9)
        r, t0, h = 0.07, 4.0, 1e-5
        fd = (profile_hat(ProfileKind.DIFFUSION_WAVE, 0, t0 + h, r, p).real
              - profile_hat(ProfileKind.DIFFUSION_WAVE, 0, t0 - h, r, p).real) / (2 * h)
        g0 = profile_hat(ProfileKind.DIFFUSION_WAVE, 0, t0, r, p).real
        g1 = profile_hat(ProfileKind.DIFFUSION_WAVE, 1, t0, r, p).real
        envelope_rate = -0.5 * p.bnu * r ** (2 * p.alpha)
        assert fd == pytest.approx(g1 + envelope_rate * g0, rel=1e-6)

    def test_zero_mode_mapped_to_zero(self):
        p = ModelParams(tau=1.0, c0=1.0, b=0.5, nu=1.0, alpha=0.3)
        assert profile_hat(ProfileKind.ANOMALOUS_DIFFUSION, 0, 5.0, 0.0, p) == 0.0

    def test_vectorized_matches_scalar(self):
        p = ModelParams(tau=1.0, c0=1.0, b=0.5, nu=1.0, alpha=0.75)
        r = np.array([0.0, 0.01, 0.2, 5.0])
        vec = profile_values(ProfileKind.DIFFUSION_WAVE, 1, 2.0, r, p, 0.5, 2.0)
        for i, ri in enumerate(r):
            assert vec[i] == pytest.approx(
                profile_hat(ProfileKind.DIFFUSION_WAVE, 1, 2.0, float(ri), p, 0.5, 2.0).real)

    def test_requires_positive_time(self):
        p = ModelParams(tau=1.0, c0=1.0, b=0.5, nu=1.0, alpha=0.3)
        with pytest.raises(ValueError):
            profile_hat(ProfileKind.ANOMALOUS_DIFFUSION, 0, 0.0, 0.1, p)


class TestMomentB0:
    def test_zero_datum(self):
        p = ModelParams(tau=1.0, c0=1.0, b=0.5, nu=1.0, alpha=0.2, dim=2)
        b0 = compute_b0((zero_datum(2), zero_datum(2), zero_datum(2)), p)
        assert b0.value == 0.0 and b0.linear_part == 0.0 and b0.nonlinear_part == 0.0

    def test_gaussian_closed_form(self):
        # psi1 = eps e^{-|x|^2/2} in n = 2: linear 2 pi eps,
        # nonlinear -tau (B/(2 A c0^2)) pi eps^2
        eps = 0.3
        p = ModelParams(tau=1.7, c0=1.2, b=0.5, nu=1.0, A=2.0, B=3.0,
                        alpha=0.2, dim=2)
        b0 = compute_b0((zero_datum(2), gaussian(2, eps, 1.0), zero_datum(2)), p)
        kappa = 3.0 / (2 * 2.0 * 1.2**2)
        assert b0.linear_part == pytest.approx(2 * math.pi * eps, rel=1e-12)
        assert b0.nonlinear_part == pytest.approx(-1.7 * kappa * math.pi * eps**2, rel=1e-12)
        assert b0.value == pytest.approx(b0.linear_part + b0.nonlinear_part)

    def test_grid_matches_analytic(self):
        # quadrature vs closed form, 256^2 box with sub-1e-12 tails
        p = ModelParams(tau=1.3, c0=1.0, b=0.5, nu=1.0, alpha=0.2, dim=2)
        grid = SpectralGrid(n=2, N=256, L=20.0)
        d0 = gaussian(2, 0.5, 1.0)
        d1 = gaussian(2, 0.2, 1.3)
        d2 = gaussian(2, -0.1, 0.8)
        analytic = compute_b0((d0, d1, d2), p)
        gridded = compute_b0((d0.sample(grid), d1.sample(grid), d2.sample(grid)),
                             p, grid=grid)
        assert gridded.linear_part == pytest.approx(analytic.linear_part, rel=1e-6)
        assert gridded.nonlinear_part == pytest.approx(analytic.nonlinear_part, rel=1e-6)

    def test_linear_part_is_mass_moment(self):
        p = ModelParams(tau=0.9, c0=1.0, b=0.5, nu=1.0, alpha=0.2, dim=3)
        d1, d2 = gaussian(3, 0.4, 1.1), gaussian(3, -0.2, 0.7)
        b0 = compute_b0((zero_datum(3), d1, d2), p)
        assert b0.linear_part == pytest.approx(moment_P(d1) + 0.9 * moment_P(d2))


class TestMoments:
    def test_unit_mass_gaussian(self):
        d = gaussian(2, 1.0 / (2 * math.pi), 1.0)
        assert moment_P(d) == pytest.approx(1.0)

    def test_first_moment_1d(self):
        assert moment_L11(gaussian(1, 1.0, 1.0)) == pytest.approx(2.0, rel=1e-12)

    def test_grid_moments(self):
        grid = SpectralGrid(n=2, N=128, L=24.0)
        d = gaussian(2, 0.7, 1.2)
        assert moment_P(d.sample(grid), grid=grid) == pytest.approx(moment_P(d), rel=1e-8)
        # the |x| weight is only Lipschitz at the origin, so the Riemann sum
        # converges slowly there
        assert moment_L11(d.sample(grid), grid=grid) == pytest.approx(
            d.first_abs_moment(), rel=1e-3)
