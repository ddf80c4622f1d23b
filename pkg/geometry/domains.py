"""
Planar Domains

Bounded planar regions given by a vectorised inside-test, a bounding box and a
signed boundary distance (negative inside). Every builtin domain is convex in
the x1 direction and contains the origin; all but the crescent also satisfy
reflection containment: if (x1, x2) is inside with x1 < 0, then so is every
(x1', x2) with x1 < x1' < -x1.

Builtin domains:
- disk:    unit disk
- ellipse: semi-axes 2 and 1
- rect:    (-1, 1) x (-0.6, 0.6), corners make it a solver-only domain
- stadium: segment [-0.5, 0.5] x {0} thickened by 0.5
- egg:     x1^2 (1 - 0.35 clamp(x1, 0, 1)) + x2^2 (1 - 0.2 x1) < 0.64,
           asymmetric and wider on the right
- crescent: unit disk with a bite taken out on the right; fails containment

Time Complexity:
- inside / boundary_distance: O(k) for k query points
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Tuple

import numpy as np

from utils.errors import InvalidDomain

Predicate = Callable[[np.ndarray, np.ndarray], np.ndarray]
Distance = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Domain2D:
    """
    Bounded planar domain, immutable after construction

    Attributes:
        name: identifier used in configs and file metadata
        inside: vectorised predicate (x1, x2) -> bool array
        bbox: (x1_min, x1_max, x2_min, x2_max)
        boundary_distance: vectorised signed distance, negative inside
        symmetric_x1: domain equals its mirror image about x1 = 0
        reflection_containment: the moving-plane containment property holds
        smooth: boundary is smooth (False for the rectangle)
    """
    name: str
    inside: Predicate
    bbox: Tuple[float, float, float, float]
    boundary_distance: Distance
    symmetric_x1: bool = False
    reflection_containment: bool = True
    smooth: bool = True
    params: Dict[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        x1_min, x1_max, x2_min, x2_max = self.bbox
        if not (x1_min < x1_max and x2_min < x2_max):
            raise InvalidDomain(f"degenerate bounding box {self.bbox} for domain {self.name}")

    def contains(self, x1, x2):
        """Vectorised inside-test accepting scalars or arrays"""
        result = self.inside(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        return bool(result) if np.ndim(result) == 0 else np.asarray(result, dtype=bool)

    def distance(self, x1, x2):
        result = self.boundary_distance(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        return float(result) if np.ndim(result) == 0 else np.asarray(result, dtype=float)

    def in_closure(self, x1, x2, tol: float = 1e-9):
        """Inside-test widened by tol to accept boundary points"""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        return np.logical_or(self.inside(x1, x2), self.boundary_distance(x1, x2) <= tol)

    def mirror(self) -> "Domain2D":
        """Mirror image about the line x1 = 0"""
        inside, dist = self.inside, self.boundary_distance
        x1_min, x1_max, x2_min, x2_max = self.bbox
        return replace(
            self,
            name=f"{self.name}-mirror",
            inside=lambda x1, x2: inside(-x1, x2),
            boundary_distance=lambda x1, x2: dist(-x1, x2),
            bbox=(-x1_max, -x1_min, x2_min, x2_max),
            # containment is stated for the left side; a mirrored asymmetric
            # domain generally loses it
            reflection_containment=self.reflection_containment and self.symmetric_x1,
        )


def _level_set_distance(phi: Callable, grad: Callable) -> Distance:
    """First-order signed distance phi / |grad phi|, exact on the zero level set"""

    def distance(x1, x2):
        g1, g2 = grad(x1, x2)
        norm = np.maximum(np.hypot(g1, g2), 1e-12)
        return phi(x1, x2) / norm

    return distance


def disk(radius: float = 1.0) -> Domain2D:
    """Disk of given radius centred at the origin"""
    return Domain2D(
        name="disk",
        inside=lambda x1, x2: np.hypot(x1, x2) < radius,
        bbox=(-radius, radius, -radius, radius),
        boundary_distance=lambda x1, x2: np.hypot(x1, x2) - radius,
        symmetric_x1=True,
    )


def ellipse(semi_x1: float = 2.0, semi_x2: float = 1.0) -> Domain2D:
    def phi(x1, x2):
        return (x1 / semi_x1) ** 2 + (x2 / semi_x2) ** 2 - 1.0

    def grad(x1, x2):
        return 2.0 * x1 / semi_x1 ** 2, 2.0 * x2 / semi_x2 ** 2

    return Domain2D(
        name="ellipse",
        inside=lambda x1, x2: phi(x1, x2) < 0.0,
        bbox=(-semi_x1, semi_x1, -semi_x2, semi_x2),
        boundary_distance=_level_set_distance(phi, grad),
        symmetric_x1=True,
    )


def rectangle(half_x1: float = 1.0, half_x2: float = 0.6) -> Domain2D:
    """Open rectangle; its corners violate smoothness, so runs on it are solver diagnostics"""

    def distance(x1, x2):
        q1 = np.abs(x1) - half_x1
        q2 = np.abs(x2) - half_x2
        outside = np.hypot(np.maximum(q1, 0.0), np.maximum(q2, 0.0))
        return outside + np.minimum(np.maximum(q1, q2), 0.0)

    return Domain2D(
        name="rect",
        inside=lambda x1, x2: (np.abs(x1) < half_x1) & (np.abs(x2) < half_x2),
        bbox=(-half_x1, half_x1, -half_x2, half_x2),
        boundary_distance=distance,
        symmetric_x1=True,
        smooth=False,
    )


def stadium(half_length: float = 0.5, radius: float = 0.5) -> Domain2D:
    def distance(x1, x2):
        nearest = np.clip(x1, -half_length, half_length)
        return np.hypot(x1 - nearest, x2) - radius

    return Domain2D(
        name="stadium",
        inside=lambda x1, x2: distance(x1, x2) < 0.0,
        bbox=(-half_length - radius, half_length + radius, -radius, radius),
        boundary_distance=distance,
        symmetric_x1=True,
    )


def egg() -> Domain2D:
    """
    Asymmetric domain, narrower on the left (x1 >= -0.8) than on the right (x1 < 0.99)

    Both asymmetry terms shrink the level set function for x1 > 0, so every
    horizontal chord extends at least as far right of x1 = 0 as left of it,
    which is exactly reflection containment.
    """

    def phi(x1, x2):
        c = np.clip(x1, 0.0, 1.0)
        return x1 ** 2 * (1.0 - 0.35 * c) + x2 ** 2 * (1.0 - 0.2 * x1) - 0.64

    def grad(x1, x2):
        c = np.clip(x1, 0.0, 1.0)
        dc = ((x1 > 0.0) & (x1 < 1.0)).astype(float)
        g1 = 2.0 * x1 * (1.0 - 0.35 * c) - 0.35 * x1 ** 2 * dc - 0.2 * x2 ** 2
        g2 = 2.0 * x2 * (1.0 - 0.2 * x1)
        return g1, g2

    return Domain2D(
        name="egg",
        inside=lambda x1, x2: phi(x1, x2) < 0.0,
        bbox=(-0.85, 1.05, -0.85, 0.85),
        boundary_distance=_level_set_distance(phi, grad),
        symmetric_x1=False,
    )


def crescent() -> Domain2D:
    """Unit disk minus the disk of radius 0.45 centred at (0.6, 0); not convex in x1"""
    centre, bite = 0.6, 0.45

    def distance(x1, x2):
        return np.maximum(np.hypot(x1, x2) - 1.0, bite - np.hypot(x1 - centre, x2))

    return Domain2D(
        name="crescent",
        inside=lambda x1, x2: distance(x1, x2) < 0.0,
        bbox=(-1.0, 1.0, -1.0, 1.0),
        boundary_distance=distance,
        symmetric_x1=False,
        reflection_containment=False,
    )


def superellipse(center=(0.0, 0.0), semi_axes=(1.0, 1.0), exponent: float = 2.0,
                 skew: float = 0.0) -> Domain2D:
    """
    Custom domain |xi1|^p (1 - skew clamp(xi1, 0, 1)) + |xi2|^p < 1, xi = (x - center) / semi_axes

    A nonnegative skew widens the right half. Horizontal chords are centred at
    c1 or pushed right of it, so reflection containment holds whenever c1 >= 0.
    """
    c1, c2 = (float(c) for c in center)
    s1, s2 = (float(s) for s in semi_axes)
    p = float(exponent)
    if s1 <= 0 or s2 <= 0:
        raise InvalidDomain(f"superellipse semi-axes must be positive, got {semi_axes}")
    if p < 1.0:
        raise InvalidDomain(f"superellipse exponent must be >= 1, got {exponent}")
    if not 0.0 <= skew < 1.0:
        raise InvalidDomain(f"superellipse skew must lie in [0, 1), got {skew}")

    def phi(x1, x2):
        xi1 = (x1 - c1) / s1
        xi2 = (x2 - c2) / s2
        return np.abs(xi1) ** p * (1.0 - skew * np.clip(xi1, 0.0, 1.0)) + np.abs(xi2) ** p - 1.0

    def grad(x1, x2, step=1e-6):
        g1 = (phi(x1 + step, x2) - phi(x1 - step, x2)) / (2 * step)
        g2 = (phi(x1, x2 + step) - phi(x1, x2 - step)) / (2 * step)
        return g1, g2

    reach = (1.0 / (1.0 - skew)) ** (1.0 / p)
    margin = 0.01 * max(s1, s2)
    return Domain2D(
        name="superellipse",
        inside=lambda x1, x2: phi(x1, x2) < 0.0,
        bbox=(c1 - s1 - margin, c1 + s1 * reach + margin, c2 - s2 - margin, c2 + s2 + margin),
        boundary_distance=_level_set_distance(phi, grad),
        symmetric_x1=(c1 == 0.0 and skew == 0.0),
        reflection_containment=c1 >= 0.0,
        params={"center": (c1, c2), "semi_axes": (s1, s2), "exponent": p, "skew": skew},
    )


BUILTIN_DOMAINS = {
    "disk": disk,
    "ellipse": ellipse,
    "rect": rectangle,
    "stadium": stadium,
    "egg": egg,
}


def builtin_domain(name: str) -> Domain2D:
    """
    Look up a builtin domain by its configuration name

    Raises:
        InvalidDomain: if the name is unknown
    """
    if name == "crescent":
        return crescent()
    try:
        return BUILTIN_DOMAINS[name]()
    except KeyError:
        known = ", ".join(sorted(BUILTIN_DOMAINS))
        raise InvalidDomain(f"unknown domain '{name}' (known: {known})") from None
