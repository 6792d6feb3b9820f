"""Continuous-spectrum evaluator for radially symmetric data.

Homogeneous Sobolev norms of linear solutions, large-time profiles, and
their differences reduce by Plancherel to one-dimensional integrals over
the frequency magnitude,

    ||f||_{H^sigma}^2 = S_n / (2 pi)^n * int_0^inf r^(2 sigma + n - 1) |f_hat(r)|^2 dr,

with S_n the unit-sphere area and the transform convention f_hat(0) = mass.
This module is the precision instrument behind the decay-rate and
profile-error verification: no periodic box, no wrap-around, adaptive
oscillation-aware quadrature in r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .datum import Datum
from .kernels import kernel_values
from .model import ModelParams, discriminant_transition, zone_thresholds
from .profiles import ProfileKind, kind_for, profile_values
from .quadrature import adaptive_panels, QuadratureError

__all__ = [
    "RadialDatum",
    "SobolevSpec",
    "hs_norm_linear",
    "hs_norm_profile",
    "hs_norm_error",
    "multiplier_hs_norm",
    "sphere_area",
    "QuadratureError",
]


def sphere_area(n: int) -> float:
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


@dataclass(frozen=True)
class RadialDatum:
    """Initial datum with analytically known radial Fourier transform."""

    label: str
    fhat: Callable[[np.ndarray], np.ndarray]
    P: float
    M1: float | None = None
    lp_norms: dict = field(default_factory=dict)
    envelope_radius: float = 12.0
    is_zero: bool = False

    @classmethod
    def from_datum(cls, d: Datum, with_first_moment: bool = True) -> "RadialDatum":
        if d.is_zero:
            return cls.zero(d.n)
        return cls(
            label=d.label,
            fhat=d.fhat,
            P=d.mass(),
            M1=d.first_abs_moment() if with_first_moment else None,
            envelope_radius=d.envelope_radius(),
        )

    @classmethod
    def zero(cls, n: int) -> "RadialDatum":
        return cls(label="zero", fhat=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
                   P=0.0, M1=0.0, envelope_radius=1.0, is_zero=True)


@dataclass(frozen=True)
class SobolevSpec:
    """Norm order, dimension, and time-derivative order of a measurement."""

    s: float
    n: int
    j: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be at least 1")
        if self.j not in (0, 1, 2, 3):
            raise ValueError("time-derivative order must be in 0..3")
        if not 2.0 * self.s + self.n > 0.0:
            raise ValueError(
                f"norm order s={self.s} violates 2s + n > 0 in dimension {self.n}"
            )


def _norm_prefactor(n: int) -> float:
    return sphere_area(n) / (2.0 * math.pi) ** n


def _oscillation_regions(params: ModelParams, t: float, r_max: float):
    """(lo, hi, max panel width) where the modal pair oscillates and is alive."""
    if t <= 0.0:
        return ()
    width = math.pi / (8.0 * params.c0 * t)
    a = params.alpha
    xi_star = discriminant_transition(params)
    if a == 0.5:
        lo, hi = 0.0, r_max
    elif a < 0.5:
        lo, hi = (xi_star, r_max)
    else:
        lo, hi = 0.0, min(xi_star, r_max)
    if a > 0.0:
        # envelope exp(-b nu r^(2a) t / 2) dead beyond ~exp(-70)
        r_dead = (140.0 / (params.bnu * t)) ** (1.0 / (2.0 * a))
        hi = min(hi, r_dead)
    elif params.bnu * t > 140.0:
        return ()
    if hi <= lo:
        return ()
    return ((lo, hi, width),)


def _data_triple(data) -> tuple[RadialDatum, RadialDatum, RadialDatum]:
    if len(data) != 3:
        raise ValueError("data must be a triple (psi0, psi1, psi2)")
    out = []
    for d in data:
        if isinstance(d, Datum):
            out.append(RadialDatum.from_datum(d))
        elif isinstance(d, RadialDatum):
            out.append(d)
        else:
            raise TypeError(f"unsupported datum type {type(d)!r}")
    return tuple(out)


def hs_norm_linear(t: float, spec: SobolevSpec, data, params: ModelParams,
                   rel_tol: float = 1e-9, seed_density: int = 32) -> float:
    """Homogeneous Sobolev norm of the j-th time derivative at time t."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    d0, d1, d2 = _data_triple(data)
    if all(d.is_zero for d in (d0, d1, d2)):
        return 0.0
    r_max = max(d.envelope_radius for d in (d0, d1, d2) if not d.is_zero)
    j = spec.j

    def integrand(r):
        kv = kernel_values(t, r, params, m_max=j)[j]
        phi = kv[0] * d0.fhat(r) + kv[1] * d1.fhat(r) + kv[2] * d2.fhat(r)
        return r ** (2.0 * spec.s + spec.n - 1.0) * phi**2

    res = adaptive_panels(
        integrand, 0.0, r_max, rel_tol=rel_tol, abs_floor=1e-280,
        osc_regions=_oscillation_regions(params, t, r_max), n_coarse=seed_density,
    )
    return math.sqrt(max(_norm_prefactor(spec.n) * res.value, 0.0))


def hs_norm_profile(t: float, spec: SobolevSpec, kind: ProfileKind, moment: float,
                    params: ModelParams, eps0: float | None = None,
                    N0: float | None = None, rel_tol: float = 1e-9) -> float:
    """Radial norm of the profile multiplier scaled by the given moment."""
    if t <= 0:
        raise ValueError("t must be positive")
    if moment == 0.0:
        return 0.0
    kind = ProfileKind(kind)
    if eps0 is None or N0 is None:
        z_eps0, z_n0 = zone_thresholds(params)
        eps0 = z_eps0 if eps0 is None else eps0
        N0 = z_n0 if N0 is None else N0
    if kind is ProfileKind.ANOMALOUS_DIFFUSION:
        if not 2.0 * spec.s + spec.n - 4.0 * params.alpha > 0.0:
            raise ValueError(
                "profile norm diverges: need 2s + n - 4 alpha > 0 for the "
                "anomalous diffusion multiplier"
            )

    def integrand(r):
        g = profile_values(kind, spec.j, t, r, params, eps0, N0)
        return r ** (2.0 * spec.s + spec.n - 1.0) * g**2

    res = adaptive_panels(
        integrand, 0.0, eps0, rel_tol=rel_tol, abs_floor=1e-280,
        osc_regions=_oscillation_regions(params, t, eps0) if kind != ProfileKind.ANOMALOUS_DIFFUSION else (),
    )
    return abs(moment) * math.sqrt(max(_norm_prefactor(spec.n) * res.value, 0.0))


def hs_norm_error(t: float, spec: SobolevSpec, data, kind: ProfileKind,
                  params: ModelParams, eps0: float | None = None,
                  N0: float | None = None, rel_tol: float = 1e-7) -> float:
    """Radial norm of (d_t^j phi_hat - G_hat_{kind,j} * P_{phi1 + tau phi2}).

    The default tolerance is looser than for solution norms: once the
    profile captures most of the solution the integrand is a small
    difference of large oscillating evaluations, and its achievable
    relative accuracy is conditioning-limited.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    kind = ProfileKind(kind)
    if kind is not kind_for(params.alpha):
        raise ValueError(f"kind {kind.name} does not match alpha={params.alpha}")
    d0, d1, d2 = _data_triple(data)
    moment = d1.P + params.tau * d2.P
    if eps0 is None or N0 is None:
        z_eps0, z_n0 = zone_thresholds(params)
        eps0 = z_eps0 if eps0 is None else eps0
        N0 = z_n0 if N0 is None else N0
    r_max = max([d.envelope_radius for d in (d0, d1, d2) if not d.is_zero] + [2.0 * eps0])
    j = spec.j

    def integrand(r):
        kv = kernel_values(t, r, params, m_max=j)[j]
        phi = kv[0] * d0.fhat(r) + kv[1] * d1.fhat(r) + kv[2] * d2.fhat(r)
        diff = phi - profile_values(kind, j, t, r, params, eps0, N0) * moment
        return r ** (2.0 * spec.s + spec.n - 1.0) * diff**2

    res = adaptive_panels(
        integrand, 0.0, r_max, rel_tol=rel_tol, abs_floor=1e-280,
        osc_regions=_oscillation_regions(params, t, r_max),
    )
    return math.sqrt(max(_norm_prefactor(spec.n) * res.value, 0.0))


def multiplier_hs_norm(t: float, s: float, n: int, beta: float, c: float,
                       eps0: float = 1.0, osc_freq: float | None = None,
                       rel_tol: float = 1e-9) -> float:
    """|| chi_int g0 |xi|^s exp(-c |xi|^beta t) ||_L2 by radial quadrature.

    g0 is 1 when osc_freq is None, else sin(osc_freq * |xi| * t).  Used to
    reproduce the optimal multiplier decay estimates numerically.
    """
    if not (beta > 0 and 2.0 * s + n > 0):
        raise ValueError("need beta > 0 and 2s + n > 0")
    from .profiles import smooth_step

    def chi_int(r):
        return 1.0 - smooth_step((r - 0.5 * eps0) / (0.5 * eps0))

    def integrand(r):
        g0 = np.sin(osc_freq * r * t) if osc_freq is not None else 1.0
        return (chi_int(r) * g0) ** 2 * r ** (2.0 * s + n - 1.0) * np.exp(-2.0 * c * r**beta * t)

    osc = ()
    if osc_freq is not None and t > 0:
        r_dead = (70.0 / (c * t)) ** (1.0 / beta)
        osc = ((0.0, min(eps0, r_dead), math.pi / (8.0 * osc_freq * t)),)
    res = adaptive_panels(integrand, 0.0, eps0, rel_tol=rel_tol,
                          abs_floor=1e-280, osc_regions=osc)
    return math.sqrt(max(_norm_prefactor(n) * res.value, 0.0))
