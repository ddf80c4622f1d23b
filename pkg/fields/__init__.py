"""
Fields Module

Uniform-grid scalar fields, discrete calculus with Shortley-Weller boundary
arms, off-grid sampling and the exact 2x2 determinant/cofactor algebra.

Available Objects:
- Sym2, det2, cof2, pair, det_diff_coeffs, is_spd
- UniformGrid, NodeClass
- DifferenceOperators
- ScalarField, gradient, hessian, sample, save_field, load_field
"""

from .sym2 import Sym2, cof2, det2, det_diff_coeffs, is_spd, min_eigenvalue, pair
from .grid import THETA_MIN, NodeClass, UniformGrid, theta_floor
from .stencils import DifferenceOperators, build_operators
from .scalar_field import (
    ScalarField,
    constant_trace,
    gradient,
    hessian,
    load_field,
    sample,
    save_field,
)

__all__ = [
    'Sym2',
    'cof2',
    'det2',
    'det_diff_coeffs',
    'is_spd',
    'min_eigenvalue',
    'pair',
    'THETA_MIN',
    'theta_floor',
    'NodeClass',
    'UniformGrid',
    'DifferenceOperators',
    'build_operators',
    'ScalarField',
    'constant_trace',
    'gradient',
    'hessian',
    'load_field',
    'sample',
    'save_field',
]
