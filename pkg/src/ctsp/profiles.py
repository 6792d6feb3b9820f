"""Large-time profile multipliers, smooth frequency cut-offs, and the
moment functional that drives the leading asymptotics.

Three profile families cover the dissipation exponent range: an anomalous
diffusion multiplier for alpha < 1/2, a damped wave (diffusion wave)
multiplier for alpha > 1/2, and the borderline wave multiplier at
alpha = 1/2.  All are supported in the interior frequency zone through a
C-infinity cut-off and vanish at the zero mode, matching the homogeneous
norms they are measured in.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .model import ModelParams, Zone, zone_thresholds

__all__ = [
    "ProfileKind",
    "kind_for",
    "smooth_step",
    "cutoff",
    "profile_hat",
    "profile_values",
    "MomentB0",
    "compute_b0",
    "moment_P",
    "moment_L11",
]


class ProfileKind(IntEnum):
    ANOMALOUS_DIFFUSION = 1  # alpha in [0, 1/2)
    DIFFUSION_WAVE = 2       # alpha in (1/2, 1]
    CRITICAL_WAVE = 3        # alpha = 1/2


def kind_for(alpha: float) -> ProfileKind:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if alpha < 0.5:
        return ProfileKind.ANOMALOUS_DIFFUSION
    if alpha > 0.5:
        return ProfileKind.DIFFUSION_WAVE
    return ProfileKind.CRITICAL_WAVE


def smooth_step(x):
    """C-infinity monotone step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    out[x >= 1.0] = 1.0
    mid = (x > 0.0) & (x < 1.0)
    if np.any(mid):
        xm = x[mid]
        bl = np.exp(-1.0 / xm)
        br = np.exp(-1.0 / (1.0 - xm))
        out[mid] = bl / (bl + br)
    return out


def cutoff(zone: Zone, xi_mag, eps0: float, N0: float):
    """Smooth partition-of-unity member for the requested frequency zone.

    chi_int is 1 on |xi| <= eps0/2 and supported in |xi| <= eps0; chi_ext is
    1 on |xi| >= 2*N0 and supported in |xi| >= N0; chi_bdd fills the rest.
    """
    if not 0.0 < eps0 < N0:
        raise ValueError("cutoff thresholds must satisfy 0 < eps0 < N0")
    r = np.abs(np.asarray(xi_mag, dtype=float))
    chi_int = 1.0 - smooth_step((r - 0.5 * eps0) / (0.5 * eps0))
    if zone is Zone.INTERIOR:
        return chi_int
    chi_ext = smooth_step((r - N0) / N0)
    if zone is Zone.EXTERIOR:
        return chi_ext
    if zone is Zone.BOUNDED:
        return 1.0 - chi_int - chi_ext
    raise ValueError(f"unknown zone {zone!r}")


def _check_kind(kind: ProfileKind, params: ModelParams) -> None:
    if ProfileKind(kind) is not kind_for(params.alpha):
        raise ValueError(
            f"profile kind {ProfileKind(kind).name} does not match alpha={params.alpha}"
        )


def profile_values(kind: ProfileKind, j: int, t: float, xi_mag, params: ModelParams,
                   eps0: float | None = None, N0: float | None = None,
                   with_cutoff: bool = True) -> np.ndarray:
    """Vectorized profile multiplier d_t^j G_hat(t, |xi|).

    The zero mode is mapped to 0 (homogeneous norms exclude it and the
    multipliers carry inverse powers of |xi| there).
    """
    if j not in (0, 1, 2, 3):
        raise ValueError("time-derivative order j must be in 0..3")
    if t <= 0.0:
        raise ValueError("profiles are large-time objects; t must be positive")
    _check_kind(kind, params)
    if eps0 is None or N0 is None:
        z_eps0, z_n0 = zone_thresholds(params)
        eps0 = z_eps0 if eps0 is None else eps0
        N0 = z_n0 if N0 is None else N0

    r = np.atleast_1d(np.asarray(xi_mag, dtype=float))
    out = np.zeros_like(r)
    pos = r > 0.0
    rp = r[pos]
    bnu = params.bnu
    a = params.alpha

    if kind is ProfileKind.ANOMALOUS_DIFFUSION:
        rate = (params.c0**2 / bnu) * rp ** (2.0 - 2.0 * a)
        vals = (1.0 / bnu) * rp ** (-2.0 * a) * (-rate) ** j * np.exp(-rate * t)
    elif kind is ProfileKind.DIFFUSION_WAVE:
        om = params.c0 * rp
        # derivative hits only the sine factor
        vals = om ** (j - 1) * np.sin(om * t + 0.5 * np.pi * j) \
            * np.exp(-0.5 * bnu * rp ** (2.0 * a) * t)
    else:  # CRITICAL_WAVE
        lam_i = 0.5 * np.sqrt(4.0 * params.c0**2 - bnu**2) * rp
        lam_r = -0.5 * bnu * rp
        z = lam_r + 1j * lam_i
        vals = np.imag(z**j * np.exp(z * t)) / lam_i
    if with_cutoff:
        vals = vals * cutoff(Zone.INTERIOR, rp, eps0, N0)
    out[pos] = vals
    return out.reshape(np.shape(xi_mag))


def profile_hat(kind: ProfileKind, j: int, t: float, xi_mag: float, params: ModelParams,
                eps0: float | None = None, N0: float | None = None) -> complex:
    """Scalar profile multiplier value."""
    return complex(profile_values(kind, j, t, float(xi_mag), params, eps0, N0))


# ----------------------------------------------------------------------
# moment functionals
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class MomentB0:
    """Effective mass of the leading profile, split into its two sources."""

    linear_part: float
    nonlinear_part: float

    @property
    def value(self) -> float:
        return self.linear_part + self.nonlinear_part


def _is_grid_triple(data) -> bool:
    return len(data) == 3 and all(isinstance(f, np.ndarray) for f in data)


def compute_b0(data, params: ModelParams, grid=None) -> MomentB0:
    """Moment driving the leading asymptotics.

    linear part      integral of (psi1 + tau*psi2)
    nonlinear part   -tau * integral of (B/(2*A*c0^2) |psi1|^2 + |grad psi0|^2)

    ``data`` is either a triple of physical-space arrays on ``grid`` (the
    gradient is then taken spectrally) or a triple of analytic datum objects
    exposing mass(), l2_squared(), and grad_l2_squared().
    """
    kappa = params.nonlinearity_coeff
    if _is_grid_triple(data):
        if grid is None:
            raise ValueError("gridded data requires the grid")
        psi0, psi1, psi2 = (np.asarray(f, dtype=float) for f in data)
        cell = (grid.L / grid.N) ** grid.n
        linear = cell * float(np.sum(psi1 + params.tau * psi2))
        grad_sq = np.zeros_like(psi0)
        if np.any(psi0):
            psi0_hat = np.fft.fftn(psi0)
            for axis_k in grid.wavenumbers():
                grad_sq += np.fft.ifftn(1j * axis_k * psi0_hat).real ** 2
        nonlinear = -params.tau * cell * float(np.sum(kappa * psi1**2 + grad_sq))
    else:
        psi0, psi1, psi2 = data
        linear = psi1.mass() + params.tau * psi2.mass()
        nonlinear = -params.tau * (kappa * psi1.l2_squared() + psi0.grad_l2_squared())
    return MomentB0(linear_part=linear, nonlinear_part=nonlinear)


def moment_P(f, grid=None) -> float:
    """Mass integral of the datum."""
    if isinstance(f, np.ndarray):
        if grid is None:
            raise ValueError("gridded datum requires the grid")
        return float(np.sum(f)) * (grid.L / grid.N) ** grid.n
    return f.mass()


def moment_L11(f, grid=None) -> float:
    """First absolute moment, the weighted-L1 ingredient."""
    if isinstance(f, np.ndarray):
        if grid is None:
            raise ValueError("gridded datum requires the grid")
        radius = np.sqrt(sum(x**2 for x in np.meshgrid(*grid.centered_axes(), indexing="ij")))
        return float(np.sum(radius * np.abs(f))) * (grid.L / grid.N) ** grid.n
    return f.first_abs_moment()
