"""
Nonlinearity Module

The coupling pair (g, f) of the Monge-Ampere system, its partial derivatives
and sampling checks of the structural hypotheses.

Available Objects:
- CoupledRHS, Which, DerivativeMode, RHSEvaluation, eval_rhs
- Builtin pairs: linear, exp, constant, negexp, radial-coupled-exp, gaussian
- Coefficient-table pairs
- SamplingBox, HypothesisReport, check_p1_symmetry, check_cross_monotonicity
"""

from .coupled_rhs import (
    BUILTIN_RHS,
    CoupledRHS,
    DerivativeMode,
    RHSEvaluation,
    Which,
    coefficient_rhs,
    eval_rhs,
    get_rhs,
)
from .hypotheses import (
    HypothesisReport,
    SamplingBox,
    check_cross_monotonicity,
    check_p1_symmetry,
)

__all__ = [
    'BUILTIN_RHS',
    'CoupledRHS',
    'DerivativeMode',
    'RHSEvaluation',
    'Which',
    'coefficient_rhs',
    'eval_rhs',
    'get_rhs',
    'HypothesisReport',
    'SamplingBox',
    'check_cross_monotonicity',
    'check_p1_symmetry',
]
