"""
Discrete Monge-Ampere Residual and Jacobian

Residual of the coupled system at every unknown node:

    R_u = det2(D^2_h u) + g(u, v, grad_h u)
    R_v = det2(D^2_h v) + f(u, v, grad_h v)

Because det2 is quadratic, its derivative in the direction of a matrix
perturbation dH is pair(cof2(H), dH). The Newton matrix on the stacked
unknowns [u ; v] is therefore

    | C_u + g_p1 D1 + g_p2 D2 + g_u     g_v                         |
    | f_u                               C_v + f_p1 D1 + f_p2 D2 + f_v |

with C = diag(c11) D11 + diag(2 c12) D12 + diag(c22) D22, c = cof2(D^2_h).
Only the columns acting on unknowns enter the matrix; boundary data is fixed.

Time Complexity:
- residual: O(n + m)
- assemble_jacobian: O(nnz) with nnz about 13 n per block
"""

import logging
from typing import Tuple

import numpy as np
from scipy import sparse

from fields.scalar_field import ScalarField, constant_trace
from fields.stencils import DifferenceOperators
from fields.sym2 import Sym2, cof2, det2, pair
from nonlinearity.coupled_rhs import CoupledRHS, Which, eval_rhs

logger = logging.getLogger(__name__)


def _check_same_grid(u: ScalarField, v: ScalarField):
    if u.grid is not v.grid:
        raise ValueError("u and v must live on the same grid")


def residual_vectors(u: ScalarField, v: ScalarField, rhs: CoupledRHS) -> Tuple[np.ndarray, np.ndarray]:
    """Residual values (R_u, R_v) at the unknowns"""
    _check_same_grid(u, v)
    hu, hv = u.hessian_field(), v.hessian_field()
    gu1, gu2 = u.gradient_field()
    gv1, gv2 = v.gradient_field()
    g = eval_rhs(rhs, Which.G, u.values, v.values, gu1, gu2).value
    f = eval_rhs(rhs, Which.F, u.values, v.values, gv1, gv2).value
    return det2(hu) + g, det2(hv) + f


def residual(u: ScalarField, v: ScalarField, rhs: CoupledRHS) -> Tuple[ScalarField, ScalarField]:
    """
    Discrete residual of both equations as fields

    Raises:
        NonFiniteResult: propagated from the nonlinearity
    """
    r_u, r_v = residual_vectors(u, v, rhs)
    zero = constant_trace(0.0)
    return ScalarField(u.grid, r_u, zero), ScalarField(u.grid, r_v, zero)


def _operator_block(ops: DifferenceOperators, hess: Sym2, dp1, dp2, dself):
    """Linearized operator of one equation with respect to its own unknowns"""
    c = cof2(hess)
    block = (sparse.diags(c.a11) @ ops.d11 + sparse.diags(2.0 * c.a12) @ ops.d12
             + sparse.diags(c.a22) @ ops.d22 + sparse.diags(dp1) @ ops.d1
             + sparse.diags(dp2) @ ops.d2)
    block = ops.interior(block.tocsr())
    return (block + sparse.diags(dself)).tocsr()


def _linearization(u: ScalarField, v: ScalarField, rhs: CoupledRHS):
    hu, hv = u.hessian_field(), v.hessian_field()
    gu1, gu2 = u.gradient_field()
    gv1, gv2 = v.gradient_field()
    g = eval_rhs(rhs, Which.G, u.values, v.values, gu1, gu2)
    f = eval_rhs(rhs, Which.F, u.values, v.values, gv1, gv2)
    return hu, hv, g, f


def assemble_jacobian(u: ScalarField, v: ScalarField, rhs: CoupledRHS) -> sparse.csr_matrix:
    """
    Sparse Newton matrix of shape (2n, 2n) on the stacked unknowns [u ; v]
    """
    _check_same_grid(u, v)
    ops = u.grid.operators
    hu, hv, g, f = _linearization(u, v, rhs)
    j_uu = _operator_block(ops, hu, g.dp1, g.dp2, g.du)
    j_vv = _operator_block(ops, hv, f.dp1, f.dp2, f.dv)
    j_uv = sparse.diags(g.dv)
    j_vu = sparse.diags(f.du)
    return sparse.bmat([[j_uu, j_uv], [j_vu, j_vv]], format="csr")


def jacobian_apply(u: ScalarField, v: ScalarField, rhs: CoupledRHS,
                   du: ScalarField, dv: ScalarField) -> Tuple[ScalarField, ScalarField]:
    """
    Directional derivative of the residual at (u, v) along (du, dv)

    The directions carry their own traces, so a constant direction with a
    constant trace has vanishing difference quotients:

        dR_u = pair(cof2(D^2 u), D^2 du) + g_p . grad du + g_u du + g_v dv
        dR_v = pair(cof2(D^2 v), D^2 dv) + f_p . grad dv + f_u du + f_v dv
    """
    _check_same_grid(u, v)
    hu, hv, g, f = _linearization(u, v, rhs)
    hdu, hdv = du.hessian_field(), dv.hessian_field()
    du1, du2 = du.gradient_field()
    dv1, dv2 = dv.gradient_field()
    d_ru = (pair(cof2(hu), hdu) + g.dp1 * du1 + g.dp2 * du2
            + g.du * du.values + g.dv * dv.values)
    d_rv = (pair(cof2(hv), hdv) + f.dp1 * dv1 + f.dp2 * dv2
            + f.du * du.values + f.dv * dv.values)
    zero = constant_trace(0.0)
    return ScalarField(u.grid, d_ru, zero), ScalarField(u.grid, d_rv, zero)
