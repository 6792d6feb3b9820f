"""Theoretical decay-exponent tables and log-log slope fitting.

The exponent of ||d_t^j psi(t)||_{H^sigma} depends on the dissipation
exponent through three regimes that join continuously at alpha = 1/2:

    alpha < 1/2 :  -(j+1) - (2 sigma + n - 4) / (2 (2 - 2 alpha))
    alpha = 1/2 :  -(sigma + j - 1) - n/2
    alpha > 1/2 :  -(2 sigma + 2 j + n - 2) / (4 alpha)

written here in terms of the measured norm order sigma (the regularity
bookkeeping of the statements is absorbed into sigma = s0 + 2 - j, or
sigma = s1 + 1 - 2 alpha for the second-derivative family).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "Variant",
    "RateQuery",
    "RateFit",
    "InadmissibleRateError",
    "theoretical_rate",
    "hypotheses_met",
    "profile_error_increment",
    "improved_error_increment",
    "fit_decay_rate",
    "fit_envelope_rate",
    "optimality_band",
    "continuity_mismatch",
    "rate_table_rows",
]


class Variant(Enum):
    SOLUTION = "solution"
    PROFILE_ERROR = "profile-error"
    IMPROVED_ERROR = "improved-error"
    IMPROVED_ERROR_NONLINEAR = "improved-error-nonlinear"
    KERNEL_DATA2 = "kernel-data2"


class InadmissibleRateError(ValueError):
    pass


@dataclass(frozen=True)
class RateQuery:
    alpha: float
    n: int
    j: int = 0
    sigma: float = 0.0
    variant: Variant = Variant.SOLUTION


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float
    window: tuple[float, float]
    n_points: int


def _validate(q: RateQuery) -> None:
    if not 0.0 <= q.alpha <= 1.0:
        raise InadmissibleRateError(f"alpha={q.alpha} outside [0, 1]")
    if q.n < 2:
        raise InadmissibleRateError(f"no statement covers dimension n={q.n}")
    if q.j not in (0, 1, 2):
        raise InadmissibleRateError(f"time-derivative order j={q.j} not tabulated")


def hypotheses_met(q: RateQuery) -> bool:
    """False when the exponent evaluates outside the stated hypotheses
    (the diffusion-wave statements need n >= 3)."""
    if q.alpha > 0.5 and q.n < 3:
        return False
    return True


def _solution_rate(alpha: float, n: int, j: int, sigma: float) -> float:
    if alpha < 0.5:
        return -(j + 1) - (2.0 * sigma + n - 4.0) / (2.0 * (2.0 - 2.0 * alpha))
    if alpha > 0.5:
        return -(2.0 * sigma + 2.0 * j + n - 2.0) / (4.0 * alpha)
    return -(sigma + j - 1.0) - 0.5 * n


def profile_error_increment(alpha: float) -> float:
    """Extra decay of the profile error on top of the solution rate
    (weighted-L1 data in the anomalous regime)."""
    if alpha < 0.5:
        return -min(alpha, 1.0 - 2.0 * alpha) / (1.0 - alpha)
    if alpha > 0.5:
        return -(2.0 * alpha - 1.0) / (2.0 * alpha)
    return -1.0


def improved_error_increment(alpha: float, nonlinear: bool = False) -> float:
    """Improved error rate for weighted-L1 data, alpha in [0, 1/2).

    The linear-problem increment is -min(alpha, 1-2 alpha)/(1-alpha); the
    nonlinear-problem counterpart is -min(2 alpha, 1-2 alpha)/(2 (1-alpha)).
    """
    if not 0.0 <= alpha < 0.5:
        raise InadmissibleRateError(
            "the improved error rate is stated for alpha in [0, 1/2)")
    if nonlinear:
        return -min(2.0 * alpha, 1.0 - 2.0 * alpha) / (2.0 * (1.0 - alpha))
    return -min(alpha, 1.0 - 2.0 * alpha) / (1.0 - alpha)


def theoretical_rate(q: RateQuery) -> float:
    """Decay exponent for the queried norm and variant."""
    _validate(q)
    v = q.variant
    if v is Variant.SOLUTION:
        return _solution_rate(q.alpha, q.n, q.j, q.sigma)
    if v is Variant.PROFILE_ERROR:
        return _solution_rate(q.alpha, q.n, q.j, q.sigma) + profile_error_increment(q.alpha)
    if v is Variant.IMPROVED_ERROR:
        return improved_error_increment(q.alpha, nonlinear=False)
    if v is Variant.IMPROVED_ERROR_NONLINEAR:
        return improved_error_increment(q.alpha, nonlinear=True)
    if v is Variant.KERNEL_DATA2:
        # data (0, 0, phi2) measured in the same-regularity norm
        if q.alpha < 0.5:
            return -(q.j + 1) + q.j / (2.0 - 2.0 * q.alpha)
        if q.alpha > 0.5:
            return -1.0 / (2.0 * q.alpha)
        return -1.0
    raise InadmissibleRateError(f"unknown variant {v!r}")


def continuity_mismatch(js=(0, 1, 2), sigmas=(0.0, 0.5, 1.0, 2.0, 3.5), ns=(2, 3, 4)) -> float:
    """Largest gap at alpha = 1/2 between the three solution-rate families."""
    worst = 0.0
    for j in js:
        for sigma in sigmas:
            for n in ns:
                left = -(j + 1) - (2 * sigma + n - 4.0) / 2.0
                mid = -(sigma + j - 1.0) - 0.5 * n
                right = -(2 * sigma + 2 * j + n - 2.0) / 2.0
                worst = max(worst, abs(left - mid), abs(right - mid))
    return worst


def _window_slice(series, window):
    t = np.asarray([pt[0] for pt in series], dtype=float)
    v = np.asarray([pt[1] for pt in series], dtype=float)
    t_min, t_max = window
    if not t_min < t_max:
        raise ValueError("fit window must have t_min < t_max")
    mask = (t >= t_min) & (t <= t_max)
    return t[mask], v[mask]


def fit_decay_rate(series, window, min_points: int = 8) -> RateFit:
    """Least-squares slope of log(value) against log(t) inside the window."""
    t, v = _window_slice(series, window)
    if t.size < min_points:
        raise ValueError(f"need at least {min_points} points in window, got {t.size}")
    if np.any(v <= 0.0):
        raise ValueError("decay-rate fit requires strictly positive values")
    x = np.log(t)
    y = np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 and ss_res < 1e-20 else 1.0 - ss_res / max(ss_tot, 1e-300)
    return RateFit(slope=float(slope), intercept=float(intercept),
                   r2=float(min(max(r2, 0.0), 1.0)),
                   window=(float(window[0]), float(window[1])), n_points=int(t.size))


def fit_envelope_rate(series, window, blocks: int = 8, min_points: int = 8) -> RateFit:
    """Slope fitted on per-block maxima, for series with bounded oscillation."""
    t, v = _window_slice(series, window)
    if t.size < min_points:
        raise ValueError(f"need at least {min_points} points in window, got {t.size}")
    if np.any(v <= 0.0):
        raise ValueError("decay-rate fit requires strictly positive values")
    edges = np.logspace(math.log10(t.min()), math.log10(t.max()) + 1e-12, blocks + 1)
    pts = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = (t >= lo) & (t <= hi)
        if np.any(m):
            i = np.argmax(v[m])
            pts.append((t[m][i], v[m][i]))
    return fit_decay_rate(pts, (t.min(), t.max()), min_points=min(len(pts), min_points))


def optimality_band(series, exponent: float, window=None) -> tuple[float, float]:
    """(min, max) of value / t^exponent; tight bands certify two-sided rates."""
    if window is None:
        t = np.asarray([pt[0] for pt in series], dtype=float)
        v = np.asarray([pt[1] for pt in series], dtype=float)
    else:
        t, v = _window_slice(series, window)
    if t.size == 0:
        raise ValueError("empty series")
    if np.any(v <= 0.0):
        raise ValueError("optimality band requires strictly positive values")
    comp = v / t**exponent
    return float(comp.min()), float(comp.max())


def rate_table_rows(alphas, ns, js, sigmas):
    """Exportable (query, exponent, hypotheses-met) rows of the solution table."""
    rows = []
    for alpha in alphas:
        for n in ns:
            for j in js:
                for sigma in sigmas:
                    q = RateQuery(alpha=alpha, n=n, j=j, sigma=sigma)
                    rows.append((q, theoretical_rate(q), hypotheses_met(q)))
    return rows


def write_rate_table_csv(path, alphas, ns, js, sigmas) -> None:
    """Dump the solution-rate table for the documentation cookbook."""
    with open(path, "w", newline="") as fh:
        fh.write("alpha,n,j,sigma,exponent,hypotheses_met\n")
        for q, rate, ok in rate_table_rows(alphas, ns, js, sigmas):
            fh.write(f"{q.alpha:.17g},{q.n},{q.j},{q.sigma:.17g},"
                     f"{rate:.17g},{str(ok).lower()}\n")
