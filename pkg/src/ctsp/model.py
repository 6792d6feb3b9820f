"""Model parameters, Fourier-zone geometry, and the characteristic roots.

The linearized symbol of the damped acoustic model factors as

    (tau*lambda + 1) * (lambda**2 + b*nu*|xi|**(2*alpha)*lambda + c0**2*|xi|**2) = 0,

so every frequency carries one relaxation root ``lambda1 = -1/tau`` and a
quadratic pair ``lambda2, lambda3``.  Everything downstream (kernels, solver,
radial norms) consumes the root data computed here.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "ModelParams",
    "Zone",
    "CharRoots",
    "RootData",
    "char_roots",
    "root_data",
    "zone_thresholds",
    "discriminant_transition",
    "asymptotic_roots",
    "max_real_part",
]

# Roots closer together than sqrt(CONFLUENCE_TOL)*scale are treated as a
# double root; guards the kernel formulas against catastrophic cancellation.
CONFLUENCE_TOL = 1e-10

ZONE_CLIP = (1e-3, 1e3)


class Zone(Enum):
    INTERIOR = "interior"
    BOUNDED = "bounded"
    EXTERIOR = "exterior"


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the model.

    tau   thermal relaxation time
    c0    sound speed
    b     viscosity number (dimensionless)
    nu    kinematic viscosity
    A, B  nonlinearity parameters
    alpha fractional dissipation exponent in [0, 1]
    dim   spatial dimension n >= 1
    """

    tau: float
    c0: float
    b: float
    nu: float
    A: float = 1.0
    B: float = 1.0
    alpha: float = 1.0
    dim: int = 2

    def __post_init__(self):
        for name in ("tau", "c0", "b", "nu", "A", "B"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"ModelParams.{name} must be strictly positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("ModelParams.alpha must lie in [0, 1]")
        if self.dim < 1:
            raise ValueError("ModelParams.dim must be a positive integer")
        if not self.b * self.nu < 2.0 * self.c0:
            raise ValueError(
                "small-viscosity regime requires b*nu < 2*c0 "
                f"(got b*nu={self.b * self.nu}, 2*c0={2.0 * self.c0})"
            )

    @property
    def bnu(self) -> float:
        return self.b * self.nu

    @property
    def nonlinearity_coeff(self) -> float:
        """Coefficient B/(2*A*c0**2) multiplying |psi_t|**2 in the forcing."""
        return self.B / (2.0 * self.A * self.c0**2)

    def mu(self, xi_mag):
        """Damping symbol b*nu*|xi|**(2*alpha).

        Uses the numpy convention 0**0 = 1, so that alpha = 0 gives the
        identity multiplier on every mode including xi = 0.
        """
        return self.bnu * np.asarray(xi_mag, dtype=float) ** (2.0 * self.alpha)


@dataclass(frozen=True)
class CharRoots:
    """The three characteristic roots at one frequency magnitude."""

    lambda1: float
    lambda2: complex
    lambda3: complex
    discriminant: float
    lambda_r: float
    lambda_i: float
    xi_mag: float


@dataclass(frozen=True)
class RootData:
    """Vectorized root ingredients over an array of |xi| values.

    lam_m is the midpoint -mu/2 of the quadratic pair and dsq the signed
    squared half-gap disc/4, so lambda_{2,3} = lam_m +- sqrt(dsq).
    """

    lam1: float
    mu: np.ndarray
    omega_sq: np.ndarray
    disc: np.ndarray
    lam_m: np.ndarray
    dsq: np.ndarray
    confluent: np.ndarray


def root_data(params: ModelParams, xi_mag) -> RootData:
    xi = np.asarray(xi_mag, dtype=float)
    if np.any(xi < 0):
        raise ValueError("frequency magnitudes must be nonnegative")
    mu = params.mu(xi)
    omega_sq = (params.c0 * xi) ** 2
    disc = mu * mu - 4.0 * omega_sq
    scale = (mu + params.c0 * xi) ** 2
    confluent = np.abs(disc) <= CONFLUENCE_TOL * scale
    return RootData(
        lam1=-1.0 / params.tau,
        mu=mu,
        omega_sq=omega_sq,
        disc=disc,
        lam_m=-0.5 * mu,
        dsq=0.25 * disc,
        confluent=confluent,
    )


def char_roots(params: ModelParams, xi_mag: float) -> CharRoots:
    """Closed-form roots of the characteristic cubic at one |xi|."""
    rd = root_data(params, float(xi_mag))
    lam_m = float(rd.lam_m)
    disc = float(rd.disc)
    if rd.confluent:
        lam2 = lam3 = complex(lam_m)
        lam_r, lam_i = lam_m, 0.0
    elif disc < 0.0:
        lam_i = 0.5 * np.sqrt(-disc)
        lam2 = complex(lam_m, lam_i)
        lam3 = complex(lam_m, -lam_i)
        lam_r = lam_m
    else:
        # stable split: the far root has no cancellation, the near root
        # comes from the product identity lambda2*lambda3 = omega^2
        q = lam_m - 0.5 * np.sqrt(disc)
        lam3 = complex(q)
        lam2 = complex(float(rd.omega_sq) / q) if q != 0.0 else complex(0.0)
        lam_r, lam_i = lam_m, 0.0
    return CharRoots(
        lambda1=rd.lam1,
        lambda2=lam2,
        lambda3=lam3,
        discriminant=disc,
        lambda_r=lam_r,
        lambda_i=lam_i,
        xi_mag=float(xi_mag),
    )


def discriminant_transition(params: ModelParams) -> float | None:
    """|xi|* where the pair discriminant changes sign, None for alpha = 1/2.

    Solves b**2*nu**2*|xi|**(4*alpha) = 4*c0**2*|xi|**2, i.e.
    |xi|* = (2*c0/(b*nu))**(1/(2*alpha - 1)).
    """
    if params.alpha == 0.5:
        return None
    return (2.0 * params.c0 / params.bnu) ** (1.0 / (2.0 * params.alpha - 1.0))


def zone_thresholds(params: ModelParams) -> tuple[float, float]:
    """(eps0, N0) anchored at the discriminant transition, clipped.

    For alpha = 1/2 the discriminant sign is |xi|-independent and fixed
    defaults (0.5, 2.0) are used.
    """
    xi_star = discriminant_transition(params)
    if xi_star is None:
        return 0.5, 2.0
    lo, hi = ZONE_CLIP
    eps0 = min(max(0.5 * xi_star, lo), hi)
    n0 = min(max(2.0 * xi_star, lo), hi)
    if not eps0 < n0:
        # both ends hit the same clip bound; restore separation inside it
        if n0 < hi:
            n0 = min(4.0 * eps0, hi)
        else:
            eps0 = max(n0 / 4.0, lo)
    return eps0, n0


def classify_zone(xi_mag: float, eps0: float, N0: float) -> Zone:
    if xi_mag <= eps0:
        return Zone.INTERIOR
    if xi_mag >= N0:
        return Zone.EXTERIOR
    return Zone.BOUNDED


def _case_zone_ok(params: ModelParams, xi_mag: float, case: int) -> bool:
    eps0, n0 = zone_thresholds(params)
    a = params.alpha
    if case == 1:
        return (a < 0.5 and xi_mag <= eps0) or (a > 0.5 and xi_mag >= n0)
    if case == 2:
        return (a < 0.5 and xi_mag >= n0) or (a > 0.5 and xi_mag <= eps0)
    return False


def asymptotic_roots(params: ModelParams, xi_mag: float, case: int) -> tuple[complex, complex]:
    """Leading-order root expansions for validation against char_roots.

    Case 1 (diffusive splitting): lambda2 ~ -c0**2/(b*nu)*|xi|**(2-2*alpha),
    lambda3 ~ -b*nu*|xi|**(2*alpha).  Case 2 (oscillatory pair): lambda_{2,3}
    ~ +-i*c0*|xi| - (b*nu/2)*|xi|**(2*alpha).
    """
    if case not in (1, 2):
        raise ValueError("case must be 1 or 2")
    if not _case_zone_ok(params, xi_mag, case):
        raise ValueError(
            f"|xi|={xi_mag} is outside the zone where the case-{case} expansion holds"
        )
    xi = float(xi_mag)
    if case == 1:
        lam2 = -(params.c0**2 / params.bnu) * xi ** (2.0 - 2.0 * params.alpha)
        lam3 = -params.bnu * xi ** (2.0 * params.alpha)
        return complex(lam2), complex(lam3)
    re = -0.5 * params.bnu * xi ** (2.0 * params.alpha)
    im = params.c0 * xi
    return complex(re, im), complex(re, -im)


def max_real_part(params: ModelParams, xi_grid) -> float:
    """max over the grid of max(Re lambda2, Re lambda3); strictly negative."""
    xi = np.asarray(xi_grid, dtype=float)
    if xi.size == 0:
        raise ValueError("xi_grid must be nonempty")
    if np.any(xi <= 0):
        raise ValueError("xi_grid magnitudes must be strictly positive")
    rd = root_data(params, xi)
    d = np.sqrt(np.maximum(rd.dsq, 0.0))
    # for disc < 0 the real part equals lam_m; for disc >= 0 the larger root
    return float(np.max(rd.lam_m + d))
