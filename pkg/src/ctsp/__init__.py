"""Spectral toolkit for a third-order-in-time acoustic wave model with
fractional dissipation: closed-form Fourier kernels, large-time profile
multipliers, decay-rate verification, and a periodic pseudospectral solver
for the full nonlinear problem."""

__version__ = "0.1.0"

from .model import CharRoots, ModelParams, Zone, char_roots, zone_thresholds
from .kernels import kernel_hat, linear_solution_hat, modal_ode_solution
from .profiles import MomentB0, ProfileKind, compute_b0, cutoff, kind_for, profile_hat
from .datum import Datum, gaussian, moment_killed, zero_datum
from .radial import RadialDatum, SobolevSpec, hs_norm_error, hs_norm_linear, hs_norm_profile
from .rates import RateFit, RateQuery, Variant, fit_decay_rate, optimality_band, theoretical_rate
from .solver import (SpectralGrid, SpectralState, grid_hs_norm, initial_state,
                     linear_propagate, nonlinear_force, picard_solve, step)

__all__ = [
    "__version__",
    "ModelParams", "CharRoots", "Zone", "char_roots", "zone_thresholds",
    "kernel_hat", "linear_solution_hat", "modal_ode_solution",
    "ProfileKind", "MomentB0", "compute_b0", "cutoff", "kind_for", "profile_hat",
    "Datum", "gaussian", "moment_killed", "zero_datum",
    "RadialDatum", "SobolevSpec", "hs_norm_linear", "hs_norm_profile", "hs_norm_error",
    "RateQuery", "RateFit", "Variant", "theoretical_rate", "fit_decay_rate", "optimality_band",
    "SpectralGrid", "SpectralState", "initial_state", "linear_propagate",
    "nonlinear_force", "step", "picard_solve", "grid_hs_norm",
]
