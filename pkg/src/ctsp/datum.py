"""Analytic initial-datum family: superpositions of isotropic Gaussians.

One datum class serves every consumer: closed-form mass and quadratic
moments for the effective-mass functional, the exact radial Fourier
transform for the continuous-spectrum evaluator, and grid sampling for the
periodic solver.  The Fourier convention is f_hat(xi) = int f(x) e^{-i x.xi} dx,
so f_hat(0) equals the mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["GaussianTerm", "Datum", "gaussian", "zero_datum", "moment_killed"]


@dataclass(frozen=True)
class GaussianTerm:
    """amplitude * exp(-|x - center|^2 / (2 width^2)); center None = origin."""

    amplitude: float
    width: float
    center: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("Gaussian width must be positive")


@dataclass(frozen=True)
class Datum:
    n: int
    terms: tuple[GaussianTerm, ...] = field(default_factory=tuple)
    label: str = ""

    @property
    def is_zero(self) -> bool:
        return len(self.terms) == 0 or all(t.amplitude == 0.0 for t in self.terms)

    def _centered(self) -> bool:
        return all(t.center is None for t in self.terms)

    def mass(self) -> float:
        return sum(t.amplitude * (2.0 * math.pi * t.width**2) ** (self.n / 2)
                   for t in self.terms)

    def l2_squared(self) -> float:
        """integral of f^2 (cross terms require common centers)."""
        if not self._centered():
            raise ValueError("analytic quadratic moments need origin-centered terms")
        total = 0.0
        for ti in self.terms:
            for tj in self.terms:
                c = 1.0 / ti.width**2 + 1.0 / tj.width**2
                total += ti.amplitude * tj.amplitude * (2.0 * math.pi / c) ** (self.n / 2)
        return total

    def grad_l2_squared(self) -> float:
        """integral of |grad f|^2."""
        if not self._centered():
            raise ValueError("analytic quadratic moments need origin-centered terms")
        total = 0.0
        for ti in self.terms:
            for tj in self.terms:
                c = 1.0 / ti.width**2 + 1.0 / tj.width**2
                w = ti.amplitude * tj.amplitude / (ti.width**2 * tj.width**2)
                total += w * (self.n / c) * (2.0 * math.pi / c) ** (self.n / 2)
        return total

    def fhat(self, r):
        """Radial Fourier transform at |xi| = r (origin-centered data only)."""
        if not self._centered():
            raise ValueError("radial transform needs origin-centered terms")
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for t in self.terms:
            out = out + t.amplitude * (2.0 * math.pi) ** (self.n / 2) * t.width**self.n \
                * np.exp(-0.5 * (t.width * r) ** 2)
        return out

    def first_abs_moment(self) -> float:
        """integral of |x| |f(x)| dx."""
        if self.is_zero:
            return 0.0
        if not self._centered():
            raise ValueError("first moment needs origin-centered terms")
        signs = {math.copysign(1.0, t.amplitude) for t in self.terms}
        if len(signs) == 1:
            # single-signed superposition: closed form per term
            total = 0.0
            for t in self.terms:
                w2 = t.width**2
                total += abs(t.amplitude) * _sphere_area(self.n) \
                    * 0.5 * (2.0 * w2) ** ((self.n + 1) / 2) * math.gamma((self.n + 1) / 2)
            return total
        # mixed signs: radial quadrature of |f|
        from scipy.integrate import quad

        w_max = max(t.width for t in self.terms)

        def radial_abs(r):
            val = sum(t.amplitude * math.exp(-0.5 * (r / t.width) ** 2) for t in self.terms)
            return abs(val) * r**self.n

        upper = 15.0 * w_max
        val, _ = quad(radial_abs, 0.0, upper, limit=200)
        return _sphere_area(self.n) * val

    def envelope_radius(self, threshold: float = 1e-20) -> float:
        """Radius beyond which |fhat| is below threshold * |fhat|(0)-scale."""
        if self.is_zero:
            return 1.0
        w_min = min(t.width for t in self.terms)
        return math.sqrt(-2.0 * math.log(threshold)) / w_min

    def sample(self, grid) -> np.ndarray:
        """Physical-space samples on the periodic grid (box-centered)."""
        out = np.zeros((grid.N,) * grid.n)
        if self.is_zero:
            return out
        axes = grid.physical_axes()
        for t in self.terms:
            center = t.center if t.center is not None else (0.5 * grid.L,) * grid.n
            r_sq = np.zeros_like(out)
            for d in range(grid.n):
                x = axes[d] - center[d]
                shape = [1] * grid.n
                shape[d] = -1
                r_sq = r_sq + (x.reshape(shape)) ** 2
            out += t.amplitude * np.exp(-0.5 * r_sq / t.width**2)
        return out

    def scaled(self, factor: float) -> "Datum":
        return Datum(
            n=self.n,
            terms=tuple(GaussianTerm(t.amplitude * factor, t.width, t.center)
                        for t in self.terms),
            label=self.label,
        )


def _sphere_area(n: int) -> float:
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def gaussian(n: int, amplitude: float = 1.0, width: float = 1.0,
             center: tuple[float, ...] | None = None, label: str = "gaussian") -> Datum:
    return Datum(n=n, terms=(GaussianTerm(amplitude, width, center),), label=label)


def zero_datum(n: int) -> Datum:
    return Datum(n=n, terms=(), label="zero")


def moment_killed(n: int, amplitude: float = 1.0, widths=(1.0, math.sqrt(2.0), 2.0),
                  label: str = "moment-killed") -> Datum:
    """Gaussian triple whose transform vanishes to fourth order at xi = 0.

    Solves sum a_i w_i^n = 0 and sum a_i w_i^(n+2) = 0, which removes both
    the mass and the second moment; the quadratic energy integrals stay
    nonzero, making this the probe for the nonlinear part of the effective
    mass without any linear low-frequency signal.
    """
    w = [float(x) for x in widths]
    if len(w) != 3:
        raise ValueError("moment_killed needs exactly three widths")
    p = [x**n for x in w]
    q = [x ** (n + 2) for x in w]
    a = (p[1] * q[2] - p[2] * q[1],
         -(p[0] * q[2] - p[2] * q[0]),
         p[0] * q[1] - p[1] * q[0])
    norm = max(abs(x) for x in a)
    terms = tuple(GaussianTerm(amplitude * ai / norm, wi) for ai, wi in zip(a, w))
    return Datum(n=n, terms=terms, label=label)
