"""
Uniform Grid with Shortley-Weller Arms

Nodes sit at integer multiples of the spacing h, so coordinates such as 0.25
are exact for dyadic h. The grid covers the domain's bounding box plus two
layers of exterior nodes. Every node inside the domain is an unknown:

- INTERIOR:       all four axis neighbours are inside
- NEAR_BOUNDARY:  at least one axis neighbour is outside; the arm towards it
                  is shortened to theta * h, theta in [theta_floor(h), 1],
                  ending at a cut point on the boundary
- EXTERIOR:       outside the domain, carries no value

Arms are stored per unknown in the order E (+x1), W (-x1), N (+x2), S (-x2).
Arms shorter than theta_floor(h) = min(THETA_MIN, 2h) are lengthened to it,
so a clamped cut point lies within 2h^2 of the boundary.
Cut points are numbered in arm order; arm_aux holds that number or -1.

Time Complexity:
- build: O(n1 * n2 + c * B) for c cut arms and B bisection steps
"""

import logging
from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property
from typing import Tuple

import numpy as np

from utils.errors import ExteriorNode, InvalidDomain

logger = logging.getLogger(__name__)

THETA_MIN = 0.05
ARM_BISECTION_STEPS = 60
MARGIN_LAYERS = 2

EAST, WEST, NORTH, SOUTH = 0, 1, 2, 3
ARM_OFFSETS = ((1, 0), (-1, 0), (0, 1), (0, -1))


class NodeClass(IntEnum):
    EXTERIOR = 0
    NEAR_BOUNDARY = 1
    INTERIOR = 2


@dataclass(frozen=True, eq=False)
class UniformGrid:
    """
    Isotropic grid masked to a domain

    Attributes:
        domain: Domain2D the grid discretizes
        h: spacing
        origin: coordinates of node (0, 0), multiples of h
        n1, n2: node counts along x1 and x2
        node_class: (n1, n2) NodeClass codes
        index: (n1, n2) unknown number of each node, -1 on exterior nodes
        ij: (n, 2) grid indices of the unknowns
        points: (n, 2) coordinates of the unknowns
        arms: (n, 4) arm fractions theta
        arm_aux: (n, 4) cut point number of each shortened arm, -1 otherwise
        cut_points: (m, 2) coordinates of the cut points
    """
    domain: object
    h: float
    origin: Tuple[float, float]
    n1: int
    n2: int
    node_class: np.ndarray
    index: np.ndarray
    ij: np.ndarray
    points: np.ndarray
    arms: np.ndarray
    arm_aux: np.ndarray
    cut_points: np.ndarray

    @classmethod
    def build(cls, domain, h: float) -> "UniformGrid":
        """
        Discretize a domain with spacing h

        Raises:
            InvalidDomain: if h is not positive or no node falls inside
        """
        if not h > 0.0:
            raise InvalidDomain(f"grid spacing must be positive, got {h}")
        x1_min, x1_max, x2_min, x2_max = domain.bbox
        k1 = int(np.floor(x1_min / h)) - MARGIN_LAYERS
        k2 = int(np.floor(x2_min / h)) - MARGIN_LAYERS
        n1 = int(np.ceil(x1_max / h)) + MARGIN_LAYERS - k1 + 1
        n2 = int(np.ceil(x2_max / h)) + MARGIN_LAYERS - k2 + 1
        xs = (k1 + np.arange(n1)) * h
        ys = (k2 + np.arange(n2)) * h
        X1, X2 = np.meshgrid(xs, ys, indexing="ij")

        inside = np.asarray(domain.inside(X1, X2), dtype=bool)
        if not inside.any():
            raise InvalidDomain(f"no grid node of spacing {h} falls inside {domain.name}")

        padded = np.pad(inside, 1, constant_values=False)
        full = (padded[2:, 1:-1] & padded[:-2, 1:-1] & padded[1:-1, 2:] & padded[1:-1, :-2])
        node_class = np.full((n1, n2), NodeClass.EXTERIOR, dtype=np.int8)
        node_class[inside] = NodeClass.NEAR_BOUNDARY
        node_class[inside & full] = NodeClass.INTERIOR

        index = np.full((n1, n2), -1, dtype=np.int64)
        ij = np.argwhere(inside)
        index[ij[:, 0], ij[:, 1]] = np.arange(len(ij))
        points = np.column_stack([xs[ij[:, 0]], ys[ij[:, 1]]])

        arms = np.ones((len(ij), 4))
        arm_aux = np.full((len(ij), 4), -1, dtype=np.int64)
        cut_chunks = []
        count = 0
        for direction, (di, dj) in enumerate(ARM_OFFSETS):
            cut = ~inside[ij[:, 0] + di, ij[:, 1] + dj]
            owners = np.flatnonzero(cut)
            if len(owners) == 0:
                continue
            start = points[owners]
            step = np.array([di, dj], dtype=float) * h
            theta = _arm_fraction(domain, start, step)
            theta = np.maximum(theta, theta_floor(h))
            arms[owners, direction] = theta
            arm_aux[owners, direction] = count + np.arange(len(owners))
            cut_chunks.append(start + theta[:, None] * step[None, :])
            count += len(owners)

        cut_points = np.concatenate(cut_chunks) if cut_chunks else np.empty((0, 2))
        grid = cls(
            domain=domain,
            h=float(h),
            origin=(float(xs[0]), float(ys[0])),
            n1=n1,
            n2=n2,
            node_class=node_class,
            index=index,
            ij=ij,
            points=points,
            arms=arms,
            arm_aux=arm_aux,
            cut_points=cut_points,
        )
        logger.debug("grid on %s: h=%g n=%d cut points=%d", domain.name, h, grid.n, len(cut_points))
        return grid

    @property
    def n(self) -> int:
        """Number of unknowns"""
        return len(self.ij)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.n1, self.n2

    @cached_property
    def classes(self) -> np.ndarray:
        """NodeClass of every unknown"""
        return self.node_class[self.ij[:, 0], self.ij[:, 1]]

    @cached_property
    def distance(self) -> np.ndarray:
        """Signed boundary distance of every unknown (negative inside)"""
        return np.asarray(self.domain.distance(self.points[:, 0], self.points[:, 1]), dtype=float)

    @cached_property
    def operators(self):
        """Sparse difference operators on the extended vector, built once per grid"""
        from fields.stencils import build_operators

        return build_operators(self)

    def coordinates(self, i, j):
        return self.origin[0] + np.asarray(i) * self.h, self.origin[1] + np.asarray(j) * self.h

    def index_at(self, i, j) -> np.ndarray:
        """Unknown number at grid indices (i, j), -1 for exterior or out-of-range nodes"""
        i = np.asarray(i)
        j = np.asarray(j)
        valid = (i >= 0) & (i < self.n1) & (j >= 0) & (j < self.n2)
        result = np.full(np.broadcast(i, j).shape, -1, dtype=np.int64)
        result[valid] = self.index[np.broadcast_to(i, result.shape)[valid],
                                   np.broadcast_to(j, result.shape)[valid]]
        return result

    def node_index(self, node) -> int:
        """
        Unknown number of a node given as (i, j) grid indices

        Raises:
            ExteriorNode: if the node is exterior or off the grid
        """
        i, j = node
        k = int(self.index_at(i, j))
        if k < 0:
            raise ExteriorNode(f"node ({i}, {j}) is exterior to {self.domain.name}")
        return k

    def nearest_node(self, x1: float, x2: float) -> Tuple[int, int]:
        i = int(round((x1 - self.origin[0]) / self.h))
        j = int(round((x2 - self.origin[1]) / self.h))
        return i, j

    def away_from_boundary(self, margin: float) -> np.ndarray:
        """Unknowns farther than margin from the boundary"""
        return self.distance < -margin

    def to_array(self, values) -> np.ndarray:
        """Scatter unknown values to an (n1, n2) array, NaN on exterior nodes"""
        out = np.full((self.n1, self.n2), np.nan)
        out[self.ij[:, 0], self.ij[:, 1]] = values
        return out


def theta_floor(h: float) -> float:
    """Smallest arm fraction kept by the grid"""
    return min(THETA_MIN, 2.0 * h)


def _arm_fraction(domain, start: np.ndarray, step: np.ndarray,
                  steps: int = ARM_BISECTION_STEPS) -> np.ndarray:
    """Fraction t in (0, 1) at which start + t * step crosses the boundary"""
    lo = np.zeros(len(start))
    hi = np.ones(len(start))
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        probe = start + mid[:, None] * step[None, :]
        inside = np.asarray(domain.inside(probe[:, 0], probe[:, 1]), dtype=bool)
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return 0.5 * (lo + hi)
