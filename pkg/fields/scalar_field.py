"""
Scalar Fields on a Uniform Grid

A ScalarField holds one value per unknown node of a UniformGrid plus a
boundary trace: a function of (x1, x2) evaluated at the grid's auxiliary
points (cut points and cross ghosts). Difference operators act on the
extended vector [values ; trace at auxiliary points].

Off-grid sampling is bilinear. At cells cut by the boundary, a corner that
lies outside the domain is replaced by a ghost value extrapolated linearly
through the adjacent inside corner and the cut point on the shared arm:

    ghost = V + (t - V) / theta        (t = trace at the cut point)

and by the trace at the corner itself when no such arm exists.

Serialization: CSV "x1,x2,value" with 17 significant digits, a `.meta`
sidecar (h, n1, n2, origin_x1, origin_x2, domain_name) and the auxiliary
trace values in `<stem>.trace.csv`.

Time Complexity:
- gradient / hessian at one node: O(1)
- gradient_field / hessian_field: O(n + m)
- sample_points: O(k) for k query points
"""

import logging
from pathlib import Path
from typing import Callable, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree

from fields.grid import EAST, NORTH, SOUTH, WEST, NodeClass, UniformGrid
from fields.sym2 import Sym2
from utils.errors import InvalidDomain, NonFiniteResult, OutsideDomain
from utils.keyvalue import read_key_values, write_key_values

logger = logging.getLogger(__name__)

Trace = Callable[[np.ndarray, np.ndarray], np.ndarray]
SNAP_TOL = 1e-9


def constant_trace(value: float) -> Trace:
    return lambda x1, x2: np.full(np.broadcast(x1, x2).shape, float(value))


class ScalarField:
    """
    Nodal values of u or v on a grid, with Dirichlet boundary data

    Attributes:
        grid: UniformGrid
        values: (n,) values at the unknowns
        trace: boundary data (x1, x2) -> value, used at auxiliary points
    """

    def __init__(self, grid: UniformGrid, values, trace: Trace):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n,):
            raise ValueError(f"expected {grid.n} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteResult("field values must be finite at every non-exterior node")
        self.grid = grid
        self.values = values
        self.trace = trace
        self._aux_values: Optional[np.ndarray] = None

    @classmethod
    def from_function(cls, grid: UniformGrid, func: Trace, trace: Optional[Trace] = None) -> "ScalarField":
        """Sample func at the nodes; the trace defaults to func itself"""
        pts = grid.points
        values = np.broadcast_to(np.asarray(func(pts[:, 0], pts[:, 1]), dtype=float), (grid.n,))
        return cls(grid, values.copy(), trace if trace is not None else func)

    def with_values(self, values) -> "ScalarField":
        """Same grid and trace, new nodal values"""
        other = ScalarField(self.grid, values, self.trace)
        other._aux_values = self._aux_values
        return other

    def axpy(self, t: float, other: "ScalarField") -> "ScalarField":
        """self + t * other, traces included"""
        trace_a, trace_b = self.trace, other.trace
        combined = ScalarField(self.grid, self.values + t * other.values,
                               lambda x1, x2: trace_a(x1, x2) + t * trace_b(x1, x2))
        combined._aux_values = self.aux_values + t * other.aux_values
        return combined

    @property
    def aux_values(self) -> np.ndarray:
        if self._aux_values is None:
            pts = self.grid.operators.aux_points
            if len(pts) == 0:
                self._aux_values = np.empty(0)
            else:
                raw = self.trace(pts[:, 0], pts[:, 1])
                self._aux_values = np.broadcast_to(np.asarray(raw, dtype=float), (len(pts),)).copy()
        return self._aux_values

    @property
    def extended(self) -> np.ndarray:
        return np.concatenate([self.values, self.aux_values])

    def __len__(self):
        return self.grid.n

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.grid.n else 0.0

    def as_array(self) -> np.ndarray:
        """(n1, n2) array with NaN at exterior nodes"""
        return self.grid.to_array(self.values)

    # discrete calculus

    def gradient_field(self) -> Tuple[np.ndarray, np.ndarray]:
        ops = self.grid.operators
        ext = self.extended
        return ops.d1 @ ext, ops.d2 @ ext

    def hessian_field(self) -> Sym2:
        ops = self.grid.operators
        ext = self.extended
        return Sym2(ops.d11 @ ext, ops.d12 @ ext, ops.d22 @ ext)

    def laplacian_field(self) -> np.ndarray:
        return self.grid.operators.laplacian @ self.extended

    def gradient(self, node) -> Tuple[float, float]:
        """
        Discrete gradient at a node given by grid indices (i, j)

        Central at INTERIOR nodes, Shortley-Weller weighted with the trace at
        NEAR_BOUNDARY nodes.

        Raises:
            ExteriorNode: if the node is exterior
        """
        k = self.grid.node_index(node)
        ops = self.grid.operators
        ext = self.extended
        return (ops.d1[k] @ ext)[0], (ops.d2[k] @ ext)[0]

    def hessian(self, node) -> Sym2:
        """
        Discrete Hessian at a node given by grid indices (i, j)

        Raises:
            ExteriorNode: if the node is exterior
        """
        k = self.grid.node_index(node)
        ops = self.grid.operators
        ext = self.extended
        return Sym2((ops.d11[k] @ ext)[0], (ops.d12[k] @ ext)[0], (ops.d22[k] @ ext)[0])

    # sampling

    def sample(self, p) -> float:
        """
        Bilinear value at a point of the closure of the domain

        Raises:
            OutsideDomain: if p is outside the closure
        """
        values, _ = self.sample_points(np.asarray(p, dtype=float).reshape(1, 2))
        return float(values[0])

    def sample_points(self, points) -> Tuple[np.ndarray, np.ndarray]:
        """
        Vectorised bilinear sampling

        Args:
            points: (k, 2) coordinates inside the closure of the domain

        Returns:
            tuple: (values, used_ghost) where used_ghost flags samples that
                read an extrapolated or trace corner

        Raises:
            OutsideDomain: if any point is outside the closure
        """
        grid = self.grid
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if len(pts) == 0:
            return np.empty(0), np.empty(0, dtype=bool)
        ok = grid.domain.in_closure(pts[:, 0], pts[:, 1])
        if not np.all(ok):
            bad = pts[np.flatnonzero(~ok)[0]]
            raise OutsideDomain(f"point ({bad[0]:.6g}, {bad[1]:.6g}) is outside {grid.domain.name}")

        q1 = _snap((pts[:, 0] - grid.origin[0]) / grid.h)
        q2 = _snap((pts[:, 1] - grid.origin[1]) / grid.h)
        i0 = np.floor(q1).astype(np.int64)
        j0 = np.floor(q2).astype(np.int64)
        t1 = q1 - i0
        t2 = q2 - j0

        ext = self.extended
        result = np.zeros(len(pts))
        used_ghost = np.zeros(len(pts), dtype=bool)
        for di, dj in ((0, 0), (1, 0), (0, 1), (1, 1)):
            weight = (t1 if di else 1.0 - t1) * (t2 if dj else 1.0 - t2)
            active = weight > 0.0
            if not np.any(active):
                continue
            ci, cj = i0[active] + di, j0[active] + dj
            corner, ghost = self._corner_values(ci, cj, di, dj, ext)
            result[active] += weight[active] * corner
            used_ghost[np.flatnonzero(active)[ghost]] = True
        return result, used_ghost

    def _corner_values(self, ci, cj, di, dj, ext):
        """Node values at cell corners, with ghosts for exterior corners"""
        grid = self.grid
        k = grid.index_at(ci, cj)
        values = np.where(k >= 0, ext[np.maximum(k, 0)], np.nan)
        missing = np.flatnonzero(k < 0)
        if len(missing) == 0:
            return values, np.zeros(len(k), dtype=bool)

        # partners in the same cell, and the arm pointing from them to the corner
        partners = (
            (ci[missing] + (1 if di == 0 else -1), cj[missing], WEST if di == 0 else EAST),
            (ci[missing], cj[missing] + (1 if dj == 0 else -1), SOUTH if dj == 0 else NORTH),
        )
        todo = np.ones(len(missing), dtype=bool)
        for pi, pj, arm in partners:
            owner = grid.index_at(pi, pj)
            usable = todo & (owner >= 0)
            usable[usable] = grid.arm_aux[owner[usable], arm] >= 0
            if not np.any(usable):
                continue
            o = owner[usable]
            theta = grid.arms[o, arm]
            cut_value = ext[grid.n + grid.arm_aux[o, arm]]
            inner = ext[o]
            values[missing[usable]] = inner + (cut_value - inner) / theta
            todo &= ~usable

        if np.any(todo):
            rest = missing[todo]
            x1, x2 = grid.coordinates(ci[rest], cj[rest])
            values[rest] = np.broadcast_to(np.asarray(self.trace(x1, x2), dtype=float), (len(rest),))
        ghost = np.zeros(len(k), dtype=bool)
        ghost[missing] = True
        return values, ghost


def _snap(q: np.ndarray) -> np.ndarray:
    nearest = np.round(q)
    return np.where(np.abs(q - nearest) < SNAP_TOL, nearest, q)


def gradient(f: ScalarField, node) -> Tuple[float, float]:
    return f.gradient(node)


def hessian(f: ScalarField, node) -> Sym2:
    return f.hessian(node)


def sample(f: ScalarField, p) -> float:
    return f.sample(p)


# serialization

def _sidecar_paths(path: Path) -> Tuple[Path, Path]:
    return path.with_suffix(".meta"), path.with_name(f"{path.stem}.trace.csv")


def save_field(field: ScalarField, path) -> Path:
    """
    Write a field as CSV plus its metadata and trace sidecars

    Returns:
        Path: the CSV path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = field.grid
    frame = pd.DataFrame({"x1": grid.points[:, 0], "x2": grid.points[:, 1], "value": field.values})
    frame.to_csv(path, index=False, float_format="%.17g")

    meta_path, trace_path = _sidecar_paths(path)
    write_key_values(meta_path, {
        "h": grid.h,
        "n1": grid.n1,
        "n2": grid.n2,
        "origin_x1": grid.origin[0],
        "origin_x2": grid.origin[1],
        "domain_name": grid.domain.name,
    })
    aux = grid.operators.aux_points
    trace_frame = pd.DataFrame({"x1": aux[:, 0], "x2": aux[:, 1], "value": field.aux_values})
    trace_frame.to_csv(trace_path, index=False, float_format="%.17g")
    return path


def _nearest_trace(points: np.ndarray, values: np.ndarray) -> Trace:
    tree = cKDTree(points)

    def trace(x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        _, idx = tree.query(np.column_stack([x1.ravel(), x2.ravel()]))
        return values[idx].reshape(x1.shape)

    return trace


def load_field(path, domain=None, grid: Optional[UniformGrid] = None) -> ScalarField:
    """
    Read a field written by save_field

    Args:
        path: CSV path
        domain: Domain2D to rebuild the grid on; looked up by the sidecar's
            domain_name when omitted
        grid: reuse an already built grid (fields of one solve share it)

    Raises:
        InvalidDomain: if the stored grid does not match the rebuilt one
    """
    from geometry.domains import builtin_domain

    path = Path(path)
    meta_path, trace_path = _sidecar_paths(path)
    meta = read_key_values(meta_path)
    if grid is not None:
        domain = grid.domain
    else:
        if domain is None:
            domain = builtin_domain(meta["domain_name"])
        grid = UniformGrid.build(domain, float(meta["h"]))
    stored = (int(meta["n1"]), int(meta["n2"]), float(meta["origin_x1"]), float(meta["origin_x2"]))
    if stored != (grid.n1, grid.n2, grid.origin[0], grid.origin[1]):
        raise InvalidDomain(f"{path}: stored grid {stored} does not match domain {domain.name}")

    frame = pd.read_csv(path)
    i = np.rint((frame["x1"].to_numpy() - grid.origin[0]) / grid.h).astype(np.int64)
    j = np.rint((frame["x2"].to_numpy() - grid.origin[1]) / grid.h).astype(np.int64)
    k = grid.index_at(i, j)
    if np.any(k < 0) or len(np.unique(k)) != grid.n:
        raise InvalidDomain(f"{path}: rows do not cover the unknowns of domain {domain.name}")
    values = np.empty(grid.n)
    values[k] = frame["value"].to_numpy()

    if trace_path.exists():
        trace_frame = pd.read_csv(trace_path)
        aux_pts = trace_frame[["x1", "x2"]].to_numpy()
        aux_vals = trace_frame["value"].to_numpy()
    else:
        logger.warning("%s has no trace sidecar; using nearest node values as boundary data", path)
        aux_pts, aux_vals = grid.points, values
    if len(aux_pts) == 0:
        aux_pts, aux_vals = grid.points, values
    return ScalarField(grid, values, _nearest_trace(aux_pts, aux_vals))


def node_class_counts(grid: UniformGrid) -> dict:
    classes = grid.classes
    return {c.name: int(np.sum(classes == c)) for c in (NodeClass.INTERIOR, NodeClass.NEAR_BOUNDARY)}
