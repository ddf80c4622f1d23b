"""
Solver Module

Damped Newton solution of the coupled Monge-Ampere system on a
Shortley-Weller grid, with convexity monitoring and manufactured-solution
validation.

Available Objects:
- residual, jacobian_apply, assemble_jacobian
- SolveConfig, InitStrategy, SolveResult, initial_guess, newton_solve
- ConvexityReport, BoundaryMonotonicityReport
- manufactured_case, convergence_study
"""

from .discretization import assemble_jacobian, jacobian_apply, residual, residual_vectors
from .newton import (
    BoundaryMonotonicityReport,
    ConvexityReport,
    InitStrategy,
    SolveConfig,
    SolveResult,
    boundary_monotonicity_report,
    convexity_report,
    initial_guess,
    newton_solve,
)
from .manufactured import (
    CATALOG,
    EXACTNESS_FLOOR,
    RATIO_BAND,
    ManufacturedCase,
    convergence_study,
    convergence_verdict,
    manufactured_case,
    solution_errors,
    solve_case,
)

__all__ = [
    'assemble_jacobian',
    'jacobian_apply',
    'residual',
    'residual_vectors',
    'BoundaryMonotonicityReport',
    'ConvexityReport',
    'InitStrategy',
    'SolveConfig',
    'SolveResult',
    'boundary_monotonicity_report',
    'convexity_report',
    'initial_guess',
    'newton_solve',
    'CATALOG',
    'EXACTNESS_FLOOR',
    'RATIO_BAND',
    'ManufacturedCase',
    'convergence_study',
    'convergence_verdict',
    'manufactured_case',
    'solution_errors',
    'solve_case',
]
