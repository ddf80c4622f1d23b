"""
Moving-Plane Geometry

The sweep compares a field with its mirror image across the vertical line
T_lambda = {x1 = lambda}, starting at the far left of the domain:

    a         = -inf { x1 : (x1, x2) in Omega }        (half width, a > 0)
    x^lambda  = (2 lambda - x1, x2)                     (reflection)
    Sigma     = { x in Omega : x1 < lambda }            (cap region)

half_width_a locates the left-most boundary point by bisection on the inside
predicate along sampled horizontal lines, then refines the best line with a
bounded scalar minimisation over x2.

Time Complexity:
- half_width_a: O(L * (S + B)) for L lines, S samples per line, B bisection steps
- cap_region: O(n) over grid nodes
- check_reflection_containment: O(samples * line_points)
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from utils.errors import InvalidDomain, LambdaOutOfRange, NonPositiveA

logger = logging.getLogger(__name__)

BISECTION_STEPS = 64


def _bisect_boundary(domain, x_out, x_in, x2, steps: int = BISECTION_STEPS):
    """
    Vectorised bisection between an outside abscissa and an inside one on each line

    Returns the abscissa of the crossing, accurate to |x_in - x_out| / 2**steps.
    """
    lo = np.array(x_out, dtype=float)
    hi = np.array(x_in, dtype=float)
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        inside = domain.inside(mid, x2)
        hi = np.where(inside, mid, hi)
        lo = np.where(inside, lo, mid)
    return 0.5 * (lo + hi)


def leftmost_points(domain, x2, line_samples: int = 1025) -> np.ndarray:
    """
    Left-most inside abscissa on each horizontal line x2 = const

    Lines that miss the domain get +inf.
    """
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    x1_min, x1_max, _, _ = domain.bbox
    span = x1_max - x1_min
    xs = np.linspace(x1_min - 0.01 * span, x1_max + 0.01 * span, line_samples)
    inside = domain.inside(xs[None, :], x2[:, None])
    hit = inside.any(axis=1)
    first = np.argmax(inside, axis=1)
    if np.any(hit & (first == 0)):
        raise InvalidDomain(f"domain {domain.name} extends past the left edge of its bounding box")

    result = np.full(x2.shape, np.inf)
    if np.any(hit):
        k = first[hit]
        result[hit] = _bisect_boundary(domain, xs[k - 1], xs[k], x2[hit])
    return result


def half_width_a(domain, lines: int = 513, tol: float = 1e-10) -> float:
    """
    Compute a = -inf{x1 : (x1, x2) in Omega}

    Args:
        domain: Domain2D
        lines: number of horizontal lines sampled across the bounding box
        tol: absolute tolerance on a

    Returns:
        float: the half width a > 0

    Raises:
        NonPositiveA: if the infimum is >= 0 (the origin is not inside)
    """
    _, _, x2_min, x2_max = domain.bbox
    x2 = np.linspace(x2_min, x2_max, lines)
    left = leftmost_points(domain, x2)
    if not np.any(np.isfinite(left)):
        raise InvalidDomain(f"domain {domain.name} has no inside points in its bounding box")

    best = int(np.argmin(left))
    lo = x2[max(best - 1, 0)]
    hi = x2[min(best + 1, lines - 1)]

    def objective(t):
        value = leftmost_points(domain, np.array([t]))[0]
        return value if np.isfinite(value) else domain.bbox[1] + 1.0

    refined = minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                              options={"xatol": min(tol, 1e-10)})
    inf_x1 = min(float(left[best]), float(refined.fun))
    a = -inf_x1
    logger.debug("half width of %s: a=%.12f (line x2=%.6f)", domain.name, a, refined.x)
    if a <= 0.0:
        raise NonPositiveA(f"inf x1 = {inf_x1:.6g} >= 0 for domain {domain.name}; origin not inside")
    return a


def reflect(p, lam):
    """
    Reflect a point (or arrays of coordinates) across the line x1 = lam

    Args:
        p: (x1, x2) pair; components may be arrays
        lam: plane position

    Returns:
        tuple: (2 lam - x1, x2)
    """
    x1, x2 = p
    return 2.0 * lam - x1, x2


@dataclass(frozen=True)
class CapRegion:
    """
    Grid nodes strictly inside Omega and strictly left of the plane x1 = lam

    indices index the grid's unknown numbering; plane_indices are the nodes
    sitting on T_lambda, which carry U = 0 and are not part of the cap.
    """
    lam: float
    indices: np.ndarray
    points: np.ndarray
    plane_indices: np.ndarray

    def __len__(self):
        return len(self.indices)

    @property
    def is_empty(self) -> bool:
        return len(self.indices) == 0


def cap_region(domain, grid, lam: float, a: Optional[float] = None) -> CapRegion:
    """
    Nodes of Sigma(lam) on the given grid

    Args:
        domain: Domain2D the grid was built on
        grid: UniformGrid
        lam: plane position, -a <= lam <= 0
        a: half width, computed when omitted

    Raises:
        LambdaOutOfRange: if lam lies outside [-a, 0]
    """
    if a is None:
        a = half_width_a(domain)
    slack = 1e-12 * max(1.0, a)
    if not (-a - slack <= lam <= slack):
        raise LambdaOutOfRange(f"lambda={lam:.6g} outside [-a, 0] with a={a:.6g}")

    x1 = grid.points[:, 0]
    on_plane = np.abs(x1 - lam) <= 1e-12 * max(1.0, abs(lam))
    left = (x1 < lam) & ~on_plane
    indices = np.flatnonzero(left)
    return CapRegion(
        lam=float(lam),
        indices=indices,
        points=grid.points[indices],
        plane_indices=np.flatnonzero(on_plane),
    )


@dataclass(frozen=True)
class ContainmentReport:
    """Outcome of check_reflection_containment; witness is (point, intermediate point)"""
    passed: bool
    samples: int
    witness: Optional[Tuple[Tuple[float, float], Tuple[float, float]]] = None


def check_reflection_containment(domain, samples: int = 10000, line_points: int = 64,
                                 seed: int = 0) -> ContainmentReport:
    """
    Check that inside points with x1 < 0 see every (x1', x2), x1 < x1' < -x1, inside

    Args:
        domain: Domain2D
        samples: number of inside points drawn with x1 < 0
        line_points: intermediate points checked per sample
        seed: random seed for the sampler

    Returns:
        ContainmentReport: pass/fail and the first counterexample found
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    x1_min, _, x2_min, x2_max = domain.bbox

    drawn = []
    count = 0
    attempts = 0
    while count < samples:
        attempts += 1
        if attempts > 1000:
            raise InvalidDomain(f"could not draw inside points with x1 < 0 from {domain.name}")
        batch = max(4 * (samples - count), 256)
        p1 = rng.uniform(x1_min, 0.0, batch)
        p2 = rng.uniform(x2_min, x2_max, batch)
        keep = domain.inside(p1, p2) & (p1 < 0.0)
        chosen = np.column_stack([p1[keep], p2[keep]])[: samples - count]
        drawn.append(chosen)
        count += len(chosen)
    pts = np.concatenate(drawn)

    # open interval (x1, -x1)
    t = np.linspace(0.0, 1.0, line_points + 2)[1:-1]
    mid_x1 = pts[:, 0:1] * (1.0 - 2.0 * t[None, :])
    mid_x2 = np.broadcast_to(pts[:, 1:2], mid_x1.shape)
    ok = domain.inside(mid_x1, mid_x2)
    failing = np.argwhere(~ok)
    if len(failing) == 0:
        return ContainmentReport(passed=True, samples=samples)

    row, col = failing[0]
    witness = ((float(pts[row, 0]), float(pts[row, 1])),
               (float(mid_x1[row, col]), float(mid_x2[row, col])))
    logger.info("reflection containment fails on %s at %s", domain.name, witness)
    return ContainmentReport(passed=False, samples=samples, witness=witness)
