"""
Coupling Nonlinearities

A CoupledRHS is the pair (g, f) of the system

    det D^2 u + g(u, v, grad u) = 0
    det D^2 v + f(u, v, grad v) = 0

Both functions take (u, v, p1, p2) and are evaluated elementwise on arrays.
Partials (d/du, d/dv, d/dp1, d/dp2) come either in closed form or from
central finite differences.

Builtin pairs:
- linear:             g = v - u - 1,                 f = u - v - 1
- exp:                g = -exp(-v),                  f = -exp(-u)
- constant:           g = -1,                        f = -1
- negexp:             g = -exp(v),                   f = -exp(u)
- radial-coupled-exp: g = v - u - 1 + (exp(v-u) - 1), f = u - v - 1 + (exp(u-v) - 1)
- gaussian:           g = v - u - u^2 - |p|^2,       f = u - v - v^2 - |p|^2

Coefficient tables (a0, a1, a2, a3, a4) define
    g = a0 + a1 u + a2 v + a3 exp(-v) + a4 (p1^2 + p2^2)
and f with the roles of u and v swapped.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from utils.errors import NonFiniteResult, UnknownRHS

logger = logging.getLogger(__name__)

FD_STEP = 1e-6

Value = Callable[..., np.ndarray]
Partials = Callable[..., tuple]


class Which(Enum):
    G = "g"
    F = "f"


class DerivativeMode(Enum):
    CLOSED_FORM = "closed_form"
    FINITE_DIFFERENCE = "finite_difference"


class RHSEvaluation(NamedTuple):
    value: np.ndarray
    du: np.ndarray
    dv: np.ndarray
    dp1: np.ndarray
    dp2: np.ndarray


@dataclass(frozen=True)
class CoupledRHS:
    """
    The coupling pair (g, f) with its partial derivatives

    Attributes:
        name: identifier used in configs and manifests
        g_value, f_value: (u, v, p1, p2) -> value
        g_partials, f_partials: (u, v, p1, p2) -> (du, dv, dp1, dp2); may be
            None, in which case only FINITE_DIFFERENCE mode is available
        derivative_mode: how evaluate() produces partials
        fd_step: finite-difference step, scaled by max(1, |x|)
    """
    name: str
    g_value: Value
    f_value: Value
    g_partials: Optional[Partials] = None
    f_partials: Optional[Partials] = None
    derivative_mode: DerivativeMode = DerivativeMode.CLOSED_FORM
    fd_step: float = FD_STEP

    def __post_init__(self):
        if self.derivative_mode is DerivativeMode.CLOSED_FORM and (
                self.g_partials is None or self.f_partials is None):
            object.__setattr__(self, "derivative_mode", DerivativeMode.FINITE_DIFFERENCE)
        if not self.fd_step > 0.0:
            raise ValueError(f"fd_step must be positive, got {self.fd_step}")

    def with_mode(self, mode: DerivativeMode, fd_step: float = FD_STEP) -> "CoupledRHS":
        return replace(self, derivative_mode=mode, fd_step=fd_step)

    def g(self, u, v, p1, p2):
        return self.g_value(u, v, p1, p2)

    def f(self, u, v, p1, p2):
        return self.f_value(u, v, p1, p2)

    def value(self, which: Which, u, v, p1, p2):
        func = self.g_value if which is Which.G else self.f_value
        return func(u, v, p1, p2)

    def partials(self, which: Which, u, v, p1, p2) -> tuple:
        if self.derivative_mode is DerivativeMode.CLOSED_FORM:
            func = self.g_partials if which is Which.G else self.f_partials
            return func(u, v, p1, p2)
        return self.finite_difference_partials(which, u, v, p1, p2)

    def finite_difference_partials(self, which: Which, u, v, p1, p2) -> tuple:
        """Central differences in each argument with step fd_step * max(1, |x|)"""
        func = self.g_value if which is Which.G else self.f_value
        args = [np.asarray(x, dtype=float) for x in (u, v, p1, p2)]
        result = []
        for k in range(4):
            step = self.fd_step * np.maximum(1.0, np.abs(args[k]))
            plus = list(args)
            minus = list(args)
            plus[k] = args[k] + step
            minus[k] = args[k] - step
            result.append((func(*plus) - func(*minus)) / (2.0 * step))
        return tuple(result)

    def evaluate(self, which: Which, u, v, p1, p2) -> RHSEvaluation:
        return eval_rhs(self, which, u, v, p1, p2)


def eval_rhs(rhs: CoupledRHS, which: Which, u, v, p1, p2) -> RHSEvaluation:
    """
    Value and the four partials of g (which=G) or f (which=F)

    Returns:
        RHSEvaluation: arrays broadcast to the common input shape

    Raises:
        NonFiniteResult: if the inputs or any output are not finite
    """
    u, v, p1, p2 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (u, v, p1, p2)))
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))
            and np.all(np.isfinite(p1)) and np.all(np.isfinite(p2))):
        raise NonFiniteResult(f"non-finite arguments passed to {rhs.name}.{which.value}")
    with np.errstate(over="ignore", invalid="ignore"):
        value = np.broadcast_to(np.asarray(rhs.value(which, u, v, p1, p2), dtype=float), u.shape)
        parts = [np.broadcast_to(np.asarray(d, dtype=float), u.shape)
                 for d in rhs.partials(which, u, v, p1, p2)]
    result = RHSEvaluation(value, *parts)
    for label, array in zip(RHSEvaluation._fields, result):
        if not np.all(np.isfinite(array)):
            bad = int(np.flatnonzero(~np.isfinite(np.ravel(array)))[0])
            at = tuple(float(np.ravel(x)[bad]) for x in (u, v, p1, p2))
            raise NonFiniteResult(f"{rhs.name}.{which.value} {label} is not finite at (u, v, p1, p2)={at}")
    return result


def _zeros(u, *_):
    return np.zeros_like(np.asarray(u, dtype=float))


def _ones(u, *_):
    return np.ones_like(np.asarray(u, dtype=float))


def linear_rhs() -> CoupledRHS:
    return CoupledRHS(
        name="linear",
        g_value=lambda u, v, p1, p2: v - u - 1.0,
        f_value=lambda u, v, p1, p2: u - v - 1.0,
        g_partials=lambda u, v, p1, p2: (-_ones(u), _ones(u), _zeros(u), _zeros(u)),
        f_partials=lambda u, v, p1, p2: (_ones(u), -_ones(u), _zeros(u), _zeros(u)),
    )


def exp_rhs() -> CoupledRHS:
    return CoupledRHS(
        name="exp",
        g_value=lambda u, v, p1, p2: -np.exp(-v) + 0.0 * u,
        f_value=lambda u, v, p1, p2: -np.exp(-u) + 0.0 * v,
        g_partials=lambda u, v, p1, p2: (_zeros(u), np.exp(-v) + 0.0 * u, _zeros(u), _zeros(u)),
        f_partials=lambda u, v, p1, p2: (np.exp(-u) + 0.0 * v, _zeros(u), _zeros(u), _zeros(u)),
    )


def constant_rhs() -> CoupledRHS:
    return CoupledRHS(
        name="constant",
        g_value=lambda u, v, p1, p2: -_ones(u),
        f_value=lambda u, v, p1, p2: -_ones(u),
        g_partials=lambda u, v, p1, p2: (_zeros(u),) * 4,
        f_partials=lambda u, v, p1, p2: (_zeros(u),) * 4,
    )


def negexp_rhs() -> CoupledRHS:
    """Violates cross monotonicity: dg/dv = -exp(v) < 0"""
    return CoupledRHS(
        name="negexp",
        g_value=lambda u, v, p1, p2: -np.exp(v) + 0.0 * u,
        f_value=lambda u, v, p1, p2: -np.exp(u) + 0.0 * v,
        g_partials=lambda u, v, p1, p2: (_zeros(u), -np.exp(v) + 0.0 * u, _zeros(u), _zeros(u)),
        f_partials=lambda u, v, p1, p2: (-np.exp(u) + 0.0 * v, _zeros(u), _zeros(u), _zeros(u)),
    )


def radial_coupled_exp_rhs() -> CoupledRHS:
    """Equals -1 on u = v, with dg/dv = 1 + exp(v - u) > 0"""

    def g_partials(u, v, p1, p2):
        e = np.exp(v - u)
        return -1.0 - e, 1.0 + e, _zeros(u), _zeros(u)

    def f_partials(u, v, p1, p2):
        e = np.exp(u - v)
        return 1.0 + e, -1.0 - e, _zeros(u), _zeros(u)

    return CoupledRHS(
        name="radial-coupled-exp",
        g_value=lambda u, v, p1, p2: v - u - 1.0 + (np.exp(v - u) - 1.0),
        f_value=lambda u, v, p1, p2: u - v - 1.0 + (np.exp(u - v) - 1.0),
        g_partials=g_partials,
        f_partials=f_partials,
    )


def gaussian_rhs() -> CoupledRHS:
    """Pair solved by u = v = exp(|x|^2 / 2), for which det D^2 u = u^2 + |grad u|^2"""
    return CoupledRHS(
        name="gaussian",
        g_value=lambda u, v, p1, p2: v - u - u * u - (p1 * p1 + p2 * p2),
        f_value=lambda u, v, p1, p2: u - v - v * v - (p1 * p1 + p2 * p2),
        g_partials=lambda u, v, p1, p2: (-1.0 - 2.0 * u, _ones(u), -2.0 * p1, -2.0 * p2),
        f_partials=lambda u, v, p1, p2: (_ones(u), -1.0 - 2.0 * v, -2.0 * p1, -2.0 * p2),
    )


def coefficient_rhs(coefficients: Sequence[float], name: str = "coefficients") -> CoupledRHS:
    """
    Pair from the table (a0, a1, a2, a3, a4)

    Raises:
        UnknownRHS: if the table does not have five finite entries
    """
    coeffs = [float(c) for c in coefficients]
    if len(coeffs) != 5 or not all(np.isfinite(coeffs)):
        raise UnknownRHS(f"coefficient table needs 5 finite entries, got {list(coefficients)}")
    a0, a1, a2, a3, a4 = coeffs

    def g_value(u, v, p1, p2):
        return a0 + a1 * u + a2 * v + a3 * np.exp(-v) + a4 * (p1 * p1 + p2 * p2)

    def f_value(u, v, p1, p2):
        return a0 + a1 * v + a2 * u + a3 * np.exp(-u) + a4 * (p1 * p1 + p2 * p2)

    def g_partials(u, v, p1, p2):
        return a1 + _zeros(u), a2 - a3 * np.exp(-v) + _zeros(u), 2.0 * a4 * p1, 2.0 * a4 * p2

    def f_partials(u, v, p1, p2):
        return a2 - a3 * np.exp(-u) + _zeros(v), a1 + _zeros(v), 2.0 * a4 * p1, 2.0 * a4 * p2

    return CoupledRHS(name=name, g_value=g_value, f_value=f_value,
                      g_partials=g_partials, f_partials=f_partials)


BUILTIN_RHS = {
    "linear": linear_rhs,
    "exp": exp_rhs,
    "constant": constant_rhs,
    "negexp": negexp_rhs,
    "radial-coupled-exp": radial_coupled_exp_rhs,
    "gaussian": gaussian_rhs,
}


def get_rhs(name: str, coefficients: Optional[Sequence[float]] = None,
            derivative_mode: DerivativeMode = DerivativeMode.CLOSED_FORM) -> CoupledRHS:
    """
    Look up a builtin pair, or build one from a coefficient table

    Raises:
        UnknownRHS: if the name is unknown
    """
    if coefficients is not None:
        rhs = coefficient_rhs(coefficients, name=name or "coefficients")
    else:
        try:
            rhs = BUILTIN_RHS[name]()
        except KeyError:
            known = ", ".join(sorted(BUILTIN_RHS))
            raise UnknownRHS(f"unknown rhs '{name}' (known: {known})") from None
    if derivative_mode is not DerivativeMode.CLOSED_FORM:
        rhs = rhs.with_mode(derivative_mode)
    return rhs


if __name__ == "__main__":
    pair = get_rhs("linear")
    print("g(0.5, 0.5, 0, 0):", eval_rhs(pair, Which.G, 0.5, 0.5, 0.0, 0.0))
    print("f(0, 0, 0, 0) for exp:", eval_rhs(get_rhs("exp"), Which.F, 0.0, 0.0, 0.0, 0.0))
