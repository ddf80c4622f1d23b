"""
Moving Planes Module

Numerical moving-plane experiments on solution pairs: reflected differences
over the cap, the critical plane, monotonicity and symmetry defects, the
linearized inequality on the cap and the narrow-strip barrier.

Available Objects:
- SweepConfig, sweep, reflect_difference, monotonicity_check, symmetry_defect
- inequality_residual
- BarrierParams, barrier_psi, barrier_ratio_bound, barrier_epsilon0, sample_barrier_ratios
"""

from .sweep import (
    CapField,
    MonotonicityReport,
    PlaneRecord,
    SweepConfig,
    SweepReport,
    default_sign_tol,
    monotonicity_check,
    plane_positions,
    reflect_difference,
    sweep,
    symmetry_defect,
)
from .inequality import InequalityResult, inequality_residual
from .barrier import (
    BarrierParams,
    BarrierSample,
    barrier_epsilon0,
    barrier_psi,
    barrier_ratio_bound,
    sample_barrier_ratios,
)

__all__ = [
    'CapField',
    'MonotonicityReport',
    'PlaneRecord',
    'SweepConfig',
    'SweepReport',
    'default_sign_tol',
    'monotonicity_check',
    'plane_positions',
    'reflect_difference',
    'sweep',
    'symmetry_defect',
    'InequalityResult',
    'inequality_residual',
    'BarrierParams',
    'BarrierSample',
    'barrier_epsilon0',
    'barrier_psi',
    'barrier_ratio_bound',
    'sample_barrier_ratios',
]
