"""
Narrow-Strip Barrier

On the strip -a < x1 < -a + epsilon the function

    psi(x1) = e - exp((x1 + a) / (2 epsilon))          (e - sqrt(e) <= psi <= e - 1)

is positive, and for an operator L = A11 D11 + B1 D1 + C with A11 >= m^2 and
|B1|, |C| <= C0 it satisfies

    L psi / psi <= N / (e - 1),    N = -(m^2 / (4 eps^2) - C0 / (2 eps) - C0) + C0 e

whenever N < 0. The largest admissible epsilon, epsilon0, is where this bound
reaches min(-1, -sqrt(G_max F_max)); below it both ratios are < -1 and their
product exceeds G_max F_max, which is what the narrow-domain start of the
moving-plane argument needs.

Time Complexity:
- barrier_ratio_bound: O(1)
- barrier_epsilon0: O(log(1 / rtol)) bisection steps
- sample_barrier_ratios: O(samples)
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from utils.errors import BarrierDomainError, NoEpsilonFound

logger = logging.getLogger(__name__)

EPSILON_FLOOR = 1e-12
BISECTION_RTOL = 1e-8
PSI_MAX = math.e - 1.0


@dataclass(frozen=True)
class BarrierParams:
    """
    Attributes:
        m: ellipticity, A11 >= m^2
        C0: bound on the lower-order coefficients
        a: half width of the domain; the strip starts at x1 = -a
        epsilon: strip width, 0 < epsilon <= a
        G_max, F_max: bounds on the coupling terms
    """
    m: float
    C0: float
    a: float = 1.0
    epsilon: float = 0.01
    G_max: float = 1.0
    F_max: float = 1.0

    def __post_init__(self):
        for name in ("m", "C0", "a", "G_max", "F_max"):
            if not getattr(self, name) > 0.0:
                raise BarrierDomainError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 < self.epsilon <= self.a:
            raise BarrierDomainError(f"epsilon must lie in (0, a={self.a}], got {self.epsilon}")

    def with_epsilon(self, epsilon: float) -> "BarrierParams":
        return replace(self, epsilon=epsilon)


def barrier_psi(x1, params: BarrierParams):
    """
    psi(x1) on the strip [-a, -a + epsilon]

    Raises:
        BarrierDomainError: if any x1 lies outside the strip
    """
    x1 = np.asarray(x1, dtype=float)
    slack = 1e-12 * max(1.0, params.a)
    lo, hi = -params.a, -params.a + params.epsilon
    if np.any(x1 < lo - slack) or np.any(x1 > hi + slack):
        raise BarrierDomainError(f"x1 outside the strip [{lo:.6g}, {hi:.6g}]")
    result = math.e - np.exp((x1 + params.a) / (2.0 * params.epsilon))
    return float(result) if result.ndim == 0 else result


def _numerator(m: float, C0: float, epsilon: float) -> float:
    return -(m * m / (4.0 * epsilon * epsilon) - C0 / (2.0 * epsilon) - C0) + C0 * math.e


def barrier_ratio_bound(params: BarrierParams) -> float:
    """Upper bound on L psi / psi over the strip; +inf when the numerator is not negative"""
    return _bound(params.m, params.C0, params.epsilon)


def _bound(m, C0, epsilon):
    numerator = _numerator(m, C0, epsilon)
    return numerator / PSI_MAX if numerator < 0.0 else math.inf


def barrier_epsilon0(m: float, C0: float, G_max: float = 1.0, F_max: float = 1.0,
                     rtol: float = BISECTION_RTOL) -> float:
    """
    Largest epsilon whose bound is at most min(-1, -sqrt(G_max F_max))

    The bound increases in epsilon up to m^2 / C0 and is +inf from there on,
    so geometric bisection between EPSILON_FLOOR and m^2 / C0 finds the
    crossing.

    Raises:
        NoEpsilonFound: if even EPSILON_FLOOR misses the threshold
    """
    threshold = min(-1.0, -math.sqrt(G_max * F_max))
    lo, hi = EPSILON_FLOOR, m * m / C0
    if _bound(m, C0, lo) > threshold:
        raise NoEpsilonFound(f"no epsilon >= {EPSILON_FLOOR:g} reaches {threshold:.6g} "
                             f"(m={m}, C0={C0}, G_max={G_max}, F_max={F_max})")
    if _bound(m, C0, hi) <= threshold:
        return hi
    while hi / lo - 1.0 > rtol:
        mid = math.sqrt(lo * hi)
        if _bound(m, C0, mid) <= threshold:
            lo = mid
        else:
            hi = mid
    logger.debug("epsilon0(m=%g, C0=%g, G=%g, F=%g) = %.9g", m, C0, G_max, F_max, lo)
    return lo


@dataclass
class BarrierSample:
    """
    Sampled L1 psi / psi and L2 psi / psi over the strip

    passed iff both maxima are < -1 and their product exceeds G_max F_max.
    """
    params: BarrierParams
    samples: int
    max_ratio_1: float
    max_ratio_2: float
    bound: float

    @property
    def product(self) -> float:
        return self.max_ratio_1 * self.max_ratio_2

    @property
    def passed(self) -> bool:
        return (self.max_ratio_1 < -1.0 and self.max_ratio_2 < -1.0
                and self.product > self.params.G_max * self.params.F_max)


def _ratios(params: BarrierParams, x1, a11, b1, c):
    grow = np.exp((x1 + params.a) / (2.0 * params.epsilon))
    psi = math.e - grow
    eps = params.epsilon
    return (-a11 * grow / (4.0 * eps * eps) - b1 * grow / (2.0 * eps) + c * psi) / psi


def sample_barrier_ratios(params: BarrierParams, samples: int = 1000,
                          seed: Optional[int] = 0) -> BarrierSample:
    """
    Draw strip points and admissible coefficients, evaluate both ratios

    A11 is drawn in [m^2, max(m^2, C0)], B1 and C in [-C0, C0]; the worst
    corner (A11 = m^2, B1 = -C0, C = C0) is always included.
    """
    rng = np.random.default_rng(seed)
    m2, C0 = params.m * params.m, params.C0
    maxima = []
    for _ in range(2):
        x1 = np.concatenate([
            -params.a + params.epsilon * rng.random(samples),
            np.linspace(-params.a, -params.a + params.epsilon, 33),
        ])
        a11 = rng.uniform(m2, max(m2, C0), len(x1))
        b1 = rng.uniform(-C0, C0, len(x1))
        c = rng.uniform(-C0, C0, len(x1))
        a11[-33:], b1[-33:], c[-33:] = m2, -C0, C0
        maxima.append(float(np.max(_ratios(params, x1, a11, b1, c))))
    report = BarrierSample(params=params, samples=samples, max_ratio_1=maxima[0],
                           max_ratio_2=maxima[1], bound=barrier_ratio_bound(params))
    logger.info("barrier eps=%.6g: max ratios %.6g, %.6g (bound %.6g) passed=%s",
                params.epsilon, report.max_ratio_1, report.max_ratio_2, report.bound, report.passed)
    return report


if __name__ == "__main__":
    eps0 = barrier_epsilon0(1.0, 1.0)
    print("epsilon0(1, 1, 1, 1) =", eps0)
    print("bound at epsilon=0.01:", barrier_ratio_bound(BarrierParams(m=1.0, C0=1.0)))
    print(sample_barrier_ratios(BarrierParams(m=1.0, C0=1.0, epsilon=eps0 / 2)).passed)
