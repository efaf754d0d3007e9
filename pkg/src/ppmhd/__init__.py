"""Positivity-preserving locally divergence-free DG solver for 2D ideal MHD."""

from .physics import (ConservedState, EosIdeal, PrimitiveState, StarDirection,
                      flux, godunov_source, internal_energy, is_admissible,
                      lf_split_functional, nstar_functional, pp_viscosity_alpha,
                      spectral_radius, to_conserved, to_primitive)
from .quadrature import QuadratureSet, gauss_legendre, gauss_lobatto
from .basis import DGField, build_divfree_basis, build_scalar_basis, build_tables
from .mesh import BoundaryKind, Mesh, build_mesh, fill_ghosts
from .scheme import (InterfaceTrace, PositivityError, SchemeParams,
                     dg_residual, discrete_divergence_fo, discrete_divergence_ho,
                     first_order_step, interface_b_jump, lf_flux)
from .limiters import pp_limit_cell, pp_limit_field, tvb_limit
from .timestep import CflReport, cfl_dg, cfl_first_order, ssp_rk3_combine, ssp_rk3_step
from .diagnostics import (RunReport, convergence_rates, error_norms,
                          pressure_drift_probe, schlieren, theory_check_suite)
from .problems import PROBLEM_IDS, ProblemSpec, exact_solution, make_problem
from .driver import RunResult, Simulation, run_problem

__version__ = "0.1.0"
