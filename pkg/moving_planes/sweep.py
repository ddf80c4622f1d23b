"""
Moving-Plane Sweep

For planes x1 = lambda moving from the left end of the domain to x1 = 0,
compare a field with its reflection on the cap region:

    U(x, lambda) = u(2 lambda - x1, x2) - u(x1, x2)     on Sigma(lambda)

The reflected values come from bilinear sampling, so U carries an O(h^2)
interpolation error; sign decisions use sign_tol = 10 h^2 (max|u| + max|v|)
by default. The critical plane lambda_bar is the last sampled plane up to
which every max U and max V stays within sign_tol.

Monotonicity is checked directly on the discrete derivative dw/dx1 at the
nodes with x1 <= -h; symmetry by comparing u with its mirror image.

Time Complexity:
- reflect_difference: O(k) for k cap nodes
- sweep: O(L * n) for L planes, split over a thread pool
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from fields.scalar_field import ScalarField
from geometry.reflection import cap_region, half_width_a
from moving_planes.inequality import inequality_residual
from nonlinearity.coupled_rhs import CoupledRHS, Which

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepConfig:
    """
    Attributes:
        lambda_count: number of planes sampled in (-a, 0]
        sign_tol: nonpositivity tolerance; None selects 10 h^2 (max|u| + max|v|)
        interior_margin: standoff from the cap boundary, in cells, for the
            differential-inequality checks run along the sweep
        threads: worker threads evaluating planes
    """
    lambda_count: int = 64
    sign_tol: Optional[float] = None
    interior_margin: float = 2.0
    threads: int = 1

    def __post_init__(self):
        if self.lambda_count < 2:
            raise ValueError(f"lambda_count must be >= 2, got {self.lambda_count}")
        if self.sign_tol is not None and not self.sign_tol > 0.0:
            raise ValueError(f"sign_tol must be positive, got {self.sign_tol}")
        if self.interior_margin < 0.0:
            raise ValueError(f"interior_margin must be >= 0, got {self.interior_margin}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")


def default_sign_tol(u: ScalarField, v: Optional[ScalarField] = None) -> float:
    h = u.grid.h
    scale = u.max_abs() + (v.max_abs() if v is not None else 0.0)
    return 10.0 * h * h * (scale if scale > 0.0 else 1.0)


@dataclass
class CapField:
    """U(., lambda) at the nodes of Sigma(lambda); NaN where the reflection left the domain"""
    lam: float
    indices: np.ndarray
    points: np.ndarray
    values: np.ndarray
    used_ghost: np.ndarray
    plane_indices: np.ndarray

    def __len__(self):
        return len(self.indices)

    def max(self) -> Tuple[float, Optional[Tuple[float, float]]]:
        """Largest finite value and its location; (-inf, None) on an empty cap"""
        finite = np.isfinite(self.values)
        if not np.any(finite):
            return -np.inf, None
        k = int(np.nanargmax(np.where(finite, self.values, -np.inf)))
        return float(self.values[k]), (float(self.points[k, 0]), float(self.points[k, 1]))

    def to_grid_array(self, grid) -> np.ndarray:
        """(n1, n2) array of U with NaN off the cap and 0 on plane nodes"""
        values = np.full(grid.n, np.nan)
        values[self.indices] = self.values
        values[self.plane_indices] = 0.0
        return grid.to_array(values)


def reflect_difference(w: ScalarField, lam: float, a: Optional[float] = None,
                       strict: bool = True) -> CapField:
    """
    U(x) = sample(w, reflect(x, lam)) - w(x) on the cap Sigma(lam)

    Args:
        w: field on a grid of the domain
        lam: plane position in [-a, 0]
        a: half width of the domain, computed when omitted
        strict: raise when a reflected node leaves the domain; otherwise the
            node gets NaN

    Raises:
        OutsideDomain: strict mode only, when reflection containment fails
        LambdaOutOfRange: if lam is outside [-a, 0]
    """
    grid = w.grid
    cap = cap_region(grid.domain, grid, lam, a)
    reflected = np.column_stack([2.0 * lam - cap.points[:, 0], cap.points[:, 1]])
    values = np.full(len(cap), np.nan)
    used_ghost = np.zeros(len(cap), dtype=bool)
    if len(cap):
        if strict:
            sampled, used_ghost = w.sample_points(reflected)
            values = sampled - w.values[cap.indices]
        else:
            ok = grid.domain.in_closure(reflected[:, 0], reflected[:, 1])
            if np.any(ok):
                sampled, ghost = w.sample_points(reflected[ok])
                values[ok] = sampled - w.values[cap.indices[ok]]
                used_ghost[ok] = ghost
    return CapField(lam=float(lam), indices=cap.indices, points=cap.points, values=values,
                    used_ghost=used_ghost, plane_indices=cap.plane_indices)


@dataclass
class PlaneRecord:
    lam: float
    max_u: float
    max_v: float
    argmax_u: Optional[Tuple[float, float]]
    argmax_v: Optional[Tuple[float, float]]
    cap_nodes: int
    outside: int
    min_inequality_g: float = np.nan
    min_inequality_f: float = np.nan


@dataclass
class MonotonicityReport:
    """
    Discrete dw/dx1 on the nodes with x1 <= -h

    passed iff every checked derivative is below threshold = sign_tol / h;
    worst_margin = threshold - max derivative.
    """
    passed: bool
    checked: int
    max_derivative: float
    threshold: float
    worst_margin: float
    witness: Optional[Tuple[float, float]] = None


@dataclass
class SweepReport:
    records: List[PlaneRecord]
    lambda_bar: float
    violations: pd.DataFrame
    symmetry_defect_u: float
    symmetry_defect_v: float
    monotonicity_u: MonotonicityReport
    monotonicity_v: MonotonicityReport
    sign_tol: float
    a: float

    @property
    def monotonicity_pass(self) -> bool:
        return self.monotonicity_u.passed and self.monotonicity_v.passed

    @property
    def all_planes_pass(self) -> bool:
        return len(self.violations) == 0

    def to_frame(self) -> pd.DataFrame:
        """Per-plane table: lambda, max_U, max_V, argmax_x1, argmax_x2 of the larger maximum"""
        rows = []
        for r in self.records:
            where = r.argmax_u if r.max_u >= r.max_v else r.argmax_v
            rows.append({
                "lambda": r.lam,
                "max_U": r.max_u,
                "max_V": r.max_v,
                "argmax_x1": where[0] if where else np.nan,
                "argmax_x2": where[1] if where else np.nan,
                "cap_nodes": r.cap_nodes,
                "min_inequality_g": r.min_inequality_g,
                "min_inequality_f": r.min_inequality_f,
            })
        return pd.DataFrame(rows, columns=["lambda", "max_U", "max_V", "argmax_x1", "argmax_x2", "cap_nodes",
                                           "min_inequality_g", "min_inequality_f"])

    def summary(self) -> dict:
        worst = min(self.monotonicity_u.worst_margin, self.monotonicity_v.worst_margin)
        return {
            "lambda_bar": self.lambda_bar,
            "symmetry_defect_u": self.symmetry_defect_u,
            "symmetry_defect_v": self.symmetry_defect_v,
            "monotonicity_pass": self.monotonicity_pass,
            "worst_margin": worst,
            "sign_tol": self.sign_tol,
            "violation_count": len(self.violations),
            "a": self.a,
        }


def plane_positions(grid, count: int) -> np.ndarray:
    """
    count planes evenly spaced from the left-most unknown node to 0, first plane excluded

    Starting at the left-most node rather than -a keeps every cap nonempty.
    """
    start = float(np.min(grid.points[:, 0]))
    return start + np.arange(1, count + 1) * (0.0 - start) / count


def symmetry_defect(w: ScalarField) -> float:
    """max over nodes with x1 < 0 of |w(x1, x2) - w(-x1, x2)|, mirror values sampled"""
    grid = w.grid
    left = np.flatnonzero(grid.points[:, 0] < 0.0)
    if len(left) == 0:
        return 0.0
    mirror = np.column_stack([-grid.points[left, 0], grid.points[left, 1]])
    ok = grid.domain.in_closure(mirror[:, 0], mirror[:, 1])
    if not np.all(ok):
        logger.debug("%d mirror points fall outside %s", int(np.sum(~ok)), grid.domain.name)
    if not np.any(ok):
        return 0.0
    sampled, _ = w.sample_points(mirror[ok])
    return float(np.max(np.abs(w.values[left[ok]] - sampled)))


def monotonicity_check(w: ScalarField, config: Optional[SweepConfig] = None,
                       sign_tol: Optional[float] = None) -> MonotonicityReport:
    """
    Check dw/dx1 < sign_tol / h at every node with x1 <= -h

    Args:
        w: field
        config: SweepConfig supplying sign_tol when sign_tol is omitted
        sign_tol: explicit tolerance; 10 h^2 max|w| when neither is given
    """
    grid = w.grid
    h = grid.h
    if sign_tol is None:
        sign_tol = config.sign_tol if config is not None and config.sign_tol else default_sign_tol(w)
    threshold = sign_tol / h
    checked = np.flatnonzero(grid.points[:, 0] <= -h * (1.0 - 1e-9))
    if len(checked) == 0:
        return MonotonicityReport(True, 0, -np.inf, threshold, np.inf)
    d1, _ = w.gradient_field()
    deriv = d1[checked]
    k = int(np.argmax(deriv))
    passed = bool(deriv[k] < threshold)
    witness = None if passed else (float(grid.points[checked[k], 0]), float(grid.points[checked[k], 1]))
    return MonotonicityReport(
        passed=passed,
        checked=len(checked),
        max_derivative=float(deriv[k]),
        threshold=threshold,
        worst_margin=float(threshold - deriv[k]),
        witness=witness,
    )


def _evaluate_plane(u: ScalarField, v: ScalarField, lam: float, a: float, sign_tol: float,
                    rhs: Optional[CoupledRHS], standoff: float):
    cap_u = reflect_difference(u, lam, a, strict=False)
    cap_v = reflect_difference(v, lam, a, strict=False)
    max_u, at_u = cap_u.max()
    max_v, at_v = cap_v.max()
    outside = int(np.sum(~np.isfinite(cap_u.values)))
    record = PlaneRecord(lam=float(lam), max_u=max_u, max_v=max_v, argmax_u=at_u, argmax_v=at_v,
                         cap_nodes=len(cap_u), outside=outside)
    if rhs is not None:
        record.min_inequality_g = inequality_residual(u, v, lam, rhs, Which.G, a).min_value(standoff)
        record.min_inequality_f = inequality_residual(u, v, lam, rhs, Which.F, a).min_value(standoff)

    frames = []
    for label, cap in (("U", cap_u), ("V", cap_v)):
        bad = np.flatnonzero(np.nan_to_num(cap.values, nan=-np.inf) > sign_tol)
        if len(bad):
            frames.append(pd.DataFrame({
                "lambda": float(lam),
                "field": label,
                "x1": cap.points[bad, 0],
                "x2": cap.points[bad, 1],
                "value": cap.values[bad],
            }))
    return record, frames


def sweep(u: ScalarField, v: ScalarField, domain=None, config: Optional[SweepConfig] = None,
          rhs: Optional[CoupledRHS] = None) -> SweepReport:
    """
    Run the moving-plane sweep on a solution pair

    Args:
        u, v: fields on the same grid
        domain: Domain2D, the grid's domain when omitted
        config: SweepConfig
        rhs: when given, the linearized inequality is also evaluated on every
            plane, at nodes farther than interior_margin cells from the cap boundary

    Returns:
        SweepReport
    """
    config = config or SweepConfig()
    grid = u.grid
    domain = domain or grid.domain
    a = half_width_a(domain)
    sign_tol = config.sign_tol if config.sign_tol is not None else default_sign_tol(u, v)
    lambdas = plane_positions(grid, config.lambda_count)
    standoff = config.interior_margin * grid.h
    logger.info("sweep on %s: a=%.6f planes=%d sign_tol=%.3e threads=%d",
                domain.name, a, len(lambdas), sign_tol, config.threads)

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            outcomes = list(pool.map(lambda lam: _evaluate_plane(u, v, lam, a, sign_tol, rhs, standoff), lambdas))
    else:
        outcomes = [_evaluate_plane(u, v, lam, a, sign_tol, rhs, standoff) for lam in lambdas]

    records = [record for record, _ in outcomes]
    frames = [frame for _, plane_frames in outcomes for frame in plane_frames]
    violations = (pd.concat(frames, ignore_index=True) if frames
                  else pd.DataFrame(columns=["lambda", "field", "x1", "x2", "value"]))

    lambda_bar = -a
    for record in records:
        if record.max_u > sign_tol or record.max_v > sign_tol:
            break
        lambda_bar = record.lam
    skipped = sum(r.outside for r in records)
    if skipped:
        logger.warning("%d reflected nodes fell outside %s and were skipped", skipped, domain.name)

    return SweepReport(
        records=records,
        lambda_bar=lambda_bar,
        violations=violations,
        symmetry_defect_u=symmetry_defect(u),
        symmetry_defect_v=symmetry_defect(v),
        monotonicity_u=monotonicity_check(u, sign_tol=sign_tol),
        monotonicity_v=monotonicity_check(v, sign_tol=sign_tol),
        sign_tol=sign_tol,
        a=a,
    )


__all__ = [
    "CapField",
    "MonotonicityReport",
    "PlaneRecord",
    "SweepConfig",
    "SweepReport",
    "default_sign_tol",
    "monotonicity_check",
    "plane_positions",
    "reflect_difference",
    "sweep",
    "symmetry_defect",
]
