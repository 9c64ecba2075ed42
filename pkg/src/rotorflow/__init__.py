"""Spectral construction of steady planar flow outside the unit disk.

The solver perturbs the rotating base flow mu e_theta / r, solves the
mode-wise stream/vorticity system by Green's-function quadrature on a
geometric radial grid, closes the nonlinearity with a relaxed fixed point,
and matches the realized mean tangential boundary velocity by a root find
over the asymptotic angular velocity.
"""

from .errors import (
    BlowUpError,
    InputError,
    ModeSolveError,
    NonConvergenceError,
    RotorflowError,
    TailDivergenceError,
    VerificationError,
)
from .grid_quadrature import (
    RadialFunction,
    RadialGrid,
    TailModel,
    build_grid,
    cell_power_moment,
    double_tail_integral,
    integral_inward,
    integral_outward,
)
from .mode_algebra import (
    MU_CRIT,
    BoundaryCoeffs,
    CriticalParams,
    NormParams,
    SpectralField,
    ZetaTable,
    alpha_margin,
    compute_zeta,
    critical_params,
    enforce_reality,
    rho,
    sequence_norm,
    weighted_norm,
)
from .linear_solver import (
    LinearSolveInput,
    TraceData,
    apply_S_mu,
    boundary_inverse,
    solve_stream_mode,
    solve_stream_zero,
    solve_vorticity_mode,
    solve_vorticity_zero,
    trace_boundary,
)
from .nonlinearity import compute_NL
from .solver import SolveReport, SolverConfig, assemble_phi, match_mu_star, solve_kappa_solution
from .field_eval import PhysicalField, decay_report, eval_fields, residual_check

__version__ = "0.1.0"

__all__ = [
    "BlowUpError", "InputError", "ModeSolveError", "NonConvergenceError",
    "RotorflowError", "TailDivergenceError", "VerificationError",
    "RadialFunction", "RadialGrid", "TailModel", "build_grid",
    "cell_power_moment", "double_tail_integral", "integral_inward",
    "integral_outward",
    "MU_CRIT", "BoundaryCoeffs", "CriticalParams", "NormParams",
    "SpectralField", "ZetaTable", "alpha_margin", "compute_zeta",
    "critical_params", "enforce_reality", "rho", "sequence_norm",
    "weighted_norm",
    "LinearSolveInput", "TraceData", "apply_S_mu", "boundary_inverse",
    "solve_stream_mode", "solve_stream_zero", "solve_vorticity_mode",
    "solve_vorticity_zero", "trace_boundary",
    "compute_NL",
    "SolveReport", "SolverConfig", "assemble_phi", "match_mu_star",
    "solve_kappa_solution",
    "PhysicalField", "decay_report", "eval_fields", "residual_check",
]
