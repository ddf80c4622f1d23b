"""
Sparse Difference Operators

All operators act on the extended vector

    [ u at the n unknowns ; trace at the m auxiliary points ]

and are CSR matrices of shape (n, n + m). Auxiliary points are the cut points
of the grid followed by ghost points used by the cross stencil.

Axis stencils (arm lengths a = theta_W h behind, b = theta_E h ahead):

    D1 u  = -b/(a(a+b)) u_W + (b-a)/(ab) u_0 + a/(b(a+b)) u_E
    D11 u = 2/(a+b) [ (u_E - u_0)/b - (u_0 - u_W)/a ]

Both reduce to the central differences when a = b = h and reproduce
quadratics exactly. The cross derivative uses the 4-point stencil

    D12 u = (u_NE - u_SE - u_NW + u_SW) / (4 h^2)

where all four diagonal neighbours are inside. Elsewhere the row of the
nearest node (within CROSS_FALLBACK_RADIUS cells) owning a full stencil is
reused; failing that, missing diagonal values come from the boundary trace
at ghost points. Both cases are flagged in cross_fallback.

Time Complexity:
- build_operators: O(n) plus O(k R^2) for k fallback nodes and radius R
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from fields.grid import ARM_OFFSETS, EAST, NORTH, SOUTH, WEST

logger = logging.getLogger(__name__)

CROSS_FALLBACK_RADIUS = 3
DIAGONALS = ((1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0))


@dataclass(frozen=True, eq=False)
class DifferenceOperators:
    """First and second difference operators of a grid on the extended vector"""
    d1: sparse.csr_matrix
    d2: sparse.csr_matrix
    d11: sparse.csr_matrix
    d22: sparse.csr_matrix
    d12: sparse.csr_matrix
    aux_points: np.ndarray
    n_cut: int
    cross_fallback: np.ndarray
    cross_ghost: np.ndarray

    @property
    def n(self) -> int:
        return self.d1.shape[0]

    @property
    def laplacian(self) -> sparse.csr_matrix:
        return (self.d11 + self.d22).tocsr()

    @staticmethod
    def interior(op) -> sparse.csr_matrix:
        """Columns acting on the unknowns"""
        return op[:, :op.shape[0]]

    @staticmethod
    def boundary(op) -> sparse.csr_matrix:
        """Columns acting on the auxiliary trace values"""
        return op[:, op.shape[0]:]


def _arm_columns(grid, direction: int) -> np.ndarray:
    """Extended-vector column reached by each unknown's arm in a direction"""
    di, dj = ARM_OFFSETS[direction]
    neighbour = grid.index_at(grid.ij[:, 0] + di, grid.ij[:, 1] + dj)
    aux = grid.arm_aux[:, direction]
    return np.where(aux >= 0, grid.n + aux, neighbour)


def _axis_operators(grid, ahead: int, behind: int, width: int):
    """Nonuniform three-point first and second differences along one axis"""
    n, h = grid.n, grid.h
    rows = np.arange(n)
    a = grid.arms[:, behind] * h
    b = grid.arms[:, ahead] * h
    col_behind = _arm_columns(grid, behind)
    col_ahead = _arm_columns(grid, ahead)
    cols = np.concatenate([col_behind, rows, col_ahead])
    all_rows = np.tile(rows, 3)

    first = np.concatenate([-b / (a * (a + b)), (b - a) / (a * b), a / (b * (a + b))])
    second = np.concatenate([2.0 / (a * (a + b)), -2.0 / (a * b), 2.0 / (b * (a + b))])
    shape = (n, width)
    d1 = sparse.csr_matrix((first, (all_rows, cols)), shape=shape)
    d11 = sparse.csr_matrix((second, (all_rows, cols)), shape=shape)
    return d1, d11


def _fallback_order(radius: int):
    offsets = [(di, dj) for di in range(-radius, radius + 1) for dj in range(-radius, radius + 1)
               if 0 < di * di + dj * dj <= radius * radius]
    return sorted(offsets, key=lambda o: (o[0] ** 2 + o[1] ** 2, o))


def build_operators(grid) -> DifferenceOperators:
    """
    Assemble the difference operators of a grid

    Args:
        grid: UniformGrid

    Returns:
        DifferenceOperators
    """
    n, h = grid.n, grid.h
    i, j = grid.ij[:, 0], grid.ij[:, 1]
    n_cut = len(grid.cut_points)

    diag_cols = np.stack([grid.index_at(i + di, j + dj) for di, dj, _ in DIAGONALS], axis=1)
    full = np.all(diag_cols >= 0, axis=1)

    # each unknown reads the cross stencil centred at source[k]
    source = np.where(full, np.arange(n), -1)
    pending = np.flatnonzero(~full)
    for di, dj in _fallback_order(CROSS_FALLBACK_RADIUS):
        if len(pending) == 0:
            break
        candidate = grid.index_at(i[pending] + di, j[pending] + dj)
        ok = candidate >= 0
        ok[ok] = full[candidate[ok]]
        source[pending[ok]] = candidate[ok]
        pending = pending[~ok]

    ghost_rows, ghost_cols, ghost_vals, ghost_points = [], [], [], []
    for k in pending:
        for col, (di, dj, sign) in zip(diag_cols[k], DIAGONALS):
            ghost_rows.append(k)
            ghost_vals.append(sign / (4.0 * h * h))
            if col >= 0:
                ghost_cols.append(col)
            else:
                ghost_cols.append(n + n_cut + len(ghost_points))
                ghost_points.append(grid.coordinates(i[k] + di, j[k] + dj))

    aux_points = grid.cut_points
    if ghost_points:
        aux_points = np.vstack([grid.cut_points, np.asarray(ghost_points, dtype=float)])
    width = n + len(aux_points)

    d1, d11 = _axis_operators(grid, EAST, WEST, width)
    d2, d22 = _axis_operators(grid, NORTH, SOUTH, width)

    copied = np.flatnonzero(source >= 0)
    rows = np.repeat(copied, 4)
    cols = diag_cols[source[copied]].ravel()
    vals = np.tile([sign / (4.0 * h * h) for _, _, sign in DIAGONALS], len(copied))
    d12 = sparse.csr_matrix(
        (np.concatenate([vals, ghost_vals]),
         (np.concatenate([rows, np.asarray(ghost_rows, dtype=np.int64)]),
          np.concatenate([cols, np.asarray(ghost_cols, dtype=np.int64)]))),
        shape=(n, width),
    )

    cross_fallback = ~full
    cross_ghost = np.zeros(n, dtype=bool)
    cross_ghost[pending] = True
    if cross_fallback.any():
        logger.debug("cross stencil fallback at %d nodes (%d with trace ghosts)",
                     int(cross_fallback.sum()), len(pending))

    return DifferenceOperators(
        d1=d1, d2=d2, d11=d11, d22=d22, d12=d12,
        aux_points=np.asarray(aux_points, dtype=float).reshape(-1, 2),
        n_cut=n_cut,
        cross_fallback=cross_fallback,
        cross_ghost=cross_ghost,
    )
