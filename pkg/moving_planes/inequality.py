"""
Linearized Inequality on the Cap

On Sigma(lambda) the reflected difference U = u_lambda - u satisfies

    a_ij D_ij U + g(u_lambda, v_lambda, grad u_lambda) - g(u, v, grad u) = 0

with a_ij = (cof(D^2 u_lambda) + cof(D^2 u)) / 2, which is what the maximum
principle argument feeds on. This module evaluates the left-hand side on the
grid so the sign claims can be inspected numerically: the determinant
difference is exact for 2x2 matrices, so the residual measures only the
discretization error of the resampled reflection.

Derivatives use central 9-point stencils on the cap nodes. A node is masked
when its stencil leaves the unknowns, when a reflected sample leaves the
domain or reads a ghost, or when the precondition du_lambda/dx1 <= h fails.

Time Complexity:
- inequality_residual: O(k) for k cap nodes
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from fields.scalar_field import ScalarField
from fields.sym2 import Sym2, det_diff_coeffs, pair
from geometry.reflection import cap_region
from nonlinearity.coupled_rhs import CoupledRHS, Which

logger = logging.getLogger(__name__)

STENCIL = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1)]


@dataclass
class InequalityResult:
    """
    Residual of the linearized inequality at cap nodes

    Attributes:
        lam: plane position
        which: equation checked (G for u, F for v)
        indices: cap node numbers
        points: cap node coordinates
        values: residual, NaN where masked
        valid: False where the node was masked
        distance: distance to the cap boundary (min of boundary distance and lam - x1)
    """
    lam: float
    which: Which
    indices: np.ndarray
    points: np.ndarray
    values: np.ndarray
    valid: np.ndarray
    distance: np.ndarray

    def __len__(self):
        return len(self.indices)

    def interior_values(self, min_distance: float) -> np.ndarray:
        """Unmasked values at nodes farther than min_distance from the cap boundary"""
        keep = self.valid & (self.distance > min_distance)
        return self.values[keep]

    def min_value(self, min_distance: float = 0.0) -> float:
        values = self.interior_values(min_distance)
        return float(np.min(values)) if len(values) else np.inf


def _central_derivatives(stack: np.ndarray, h: float):
    """Gradient and Hessian from (9, k) values laid out as STENCIL"""
    at = {offset: stack[k] for k, offset in enumerate(STENCIL)}
    p1 = (at[(1, 0)] - at[(-1, 0)]) / (2.0 * h)
    p2 = (at[(0, 1)] - at[(0, -1)]) / (2.0 * h)
    hess = Sym2(
        (at[(1, 0)] - 2.0 * at[(0, 0)] + at[(-1, 0)]) / (h * h),
        (at[(1, 1)] - at[(1, -1)] - at[(-1, 1)] + at[(-1, -1)]) / (4.0 * h * h),
        (at[(0, 1)] - 2.0 * at[(0, 0)] + at[(0, -1)]) / (h * h),
    )
    return p1, p2, hess


def inequality_residual(u: ScalarField, v: ScalarField, lam: float, rhs: CoupledRHS,
                        which: Which = Which.G, a: Optional[float] = None) -> InequalityResult:
    """
    Evaluate a_ij D_ij W + rhs(reflected) - rhs(original) on Sigma(lam)

    W is U = u_lambda - u for which=G and V = v_lambda - v for which=F.

    Args:
        u, v: solution fields on one grid
        lam: plane position in [-a, 0]
        rhs: the nonlinearity pair
        which: equation to evaluate
        a: half width, computed when omitted

    Returns:
        InequalityResult, empty when the cap has no nodes

    Raises:
        LambdaOutOfRange: if lam is outside [-a, 0]
    """
    grid = u.grid
    h = grid.h
    cap = cap_region(grid.domain, grid, lam, a)
    k = len(cap)
    if k == 0:
        empty = np.empty(0)
        return InequalityResult(float(lam), which, cap.indices, cap.points, empty,
                                np.empty(0, dtype=bool), empty)

    ci, cj = grid.ij[cap.indices, 0], grid.ij[cap.indices, 1]
    neighbours = np.stack([grid.index_at(ci + di, cj + dj) for di, dj in STENCIL])
    valid = np.all(neighbours >= 0, axis=0)

    # reflected values on the full stencil
    reflected = {name: np.full((len(STENCIL), k), np.nan) for name in ("u", "v")}
    for s, (di, dj) in enumerate(STENCIL):
        x1, x2 = grid.coordinates(ci + di, cj + dj)
        rx1 = 2.0 * lam - x1
        inside = grid.domain.in_closure(rx1, x2)
        valid &= inside
        if not np.any(inside):
            continue
        pts = np.column_stack([rx1[inside], x2[inside]])
        for name, field in (("u", u), ("v", v)):
            sampled, ghost = field.sample_points(pts)
            reflected[name][s, inside] = sampled
            contaminated = np.zeros(k, dtype=bool)
            contaminated[np.flatnonzero(inside)[ghost]] = True
            valid &= ~contaminated

    safe = np.maximum(neighbours, 0)
    original = {"u": u.values[safe], "v": v.values[safe]}

    w = "u" if which is Which.G else "v"
    p1_ref, p2_ref, hess_ref = _central_derivatives(reflected[w], h)
    p1_org, p2_org, hess_org = _central_derivatives(original[w], h)
    centre = STENCIL.index((0, 0))

    # the cap argument needs the reflected field non-increasing in x1
    du_ref, _, _ = _central_derivatives(reflected["u"], h)
    valid &= np.nan_to_num(du_ref, nan=np.inf) <= h

    with np.errstate(invalid="ignore"):
        coeffs = det_diff_coeffs(hess_ref, hess_org)
        principal = pair(coeffs, hess_ref - hess_org)
    values = np.full(k, np.nan)
    if np.any(valid):
        sel = np.flatnonzero(valid)
        ref_args = (reflected["u"][centre, sel], reflected["v"][centre, sel], p1_ref[sel], p2_ref[sel])
        org_args = (original["u"][centre, sel], original["v"][centre, sel], p1_org[sel], p2_org[sel])
        values[sel] = (principal[sel] + np.asarray(rhs.value(which, *ref_args), dtype=float)
                       - np.asarray(rhs.value(which, *org_args), dtype=float))

    distance = np.minimum(-grid.distance[cap.indices], lam - cap.points[:, 0])
    logger.debug("inequality %s at lambda=%.6g: %d of %d nodes usable",
                 which.name, lam, int(np.sum(valid)), k)
    return InequalityResult(float(lam), which, cap.indices, cap.points, values, valid, distance)


__all__ = ["InequalityResult", "inequality_residual"]
