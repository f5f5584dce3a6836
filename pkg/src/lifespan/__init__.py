"""Life-span lower bounds for Navier-Stokes initial data on the periodic box.

Pseudo-spectral fields, negative-regularity norms, the nonlinear heat-flow
quantities entering the bounds, a small integrating-factor solver, and a CLI
for sweeps over an oscillating data family.
"""

from .bounds import BoundConstants, BoundReport, compute_bounds, kt_smallness, m_l_and_t_star, q0, q1, t_fp, t_l
from .data import BumpProfile, OscillatoryParams, make_divfree_random, make_oscillatory_data, modulate
from .fitting import FitResult, fit_exponent
from .spaces import LPFilterBank, NormReport, TimeGrid, besov_norm_dyadic, besov_norm_heat, bmo_inv_norm, sobolev_norm
from .spectral import Grid, SpectralField, SpectralVectorField, forward, inverse, leray_project
from .solver import SolverConfig, Trajectory, integrate, step

__all__ = [
    "BoundConstants", "BoundReport", "BumpProfile", "FitResult", "Grid", "LPFilterBank", "NormReport",
    "OscillatoryParams", "SolverConfig", "SpectralField", "SpectralVectorField", "TimeGrid", "Trajectory",
    "besov_norm_dyadic", "besov_norm_heat", "bmo_inv_norm", "compute_bounds", "fit_exponent", "forward",
    "integrate", "inverse", "kt_smallness", "leray_project", "m_l_and_t_star", "make_divfree_random",
    "make_oscillatory_data", "modulate", "q0", "q1", "sobolev_norm", "step", "t_fp", "t_l",
]
