"""
Error Hierarchy

All failures raised by the laboratory derive from MongeAmpereError. Input
validation errors also derive from ValueError so callers that only know the
builtin exception keep working.

Each error renders a single machine-readable line through reason(), which the
command-line runner prints on stderr:

    error=DidNotConverge reason=max_iters=25 last_residual=3.1e-04
"""


class MongeAmpereError(Exception):
    """Base class for every error raised by the package"""

    def reason(self) -> str:
        message = " ".join(str(self).split())
        return f"error={type(self).__name__} reason={message}"


# geometry

class InvalidDomain(MongeAmpereError, ValueError):
    pass


class NonPositiveA(MongeAmpereError, ValueError):
    pass


class LambdaOutOfRange(MongeAmpereError, ValueError):
    pass


# fields

class ExteriorNode(MongeAmpereError, IndexError):
    pass


class OutsideDomain(MongeAmpereError, ValueError):
    pass


# nonlinearity

class NonFiniteResult(MongeAmpereError, ArithmeticError):
    pass


class UnknownRHS(MongeAmpereError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


# solver

class SolveError(MongeAmpereError, RuntimeError):
    pass


class DidNotConverge(SolveError):
    """Newton stopped without reaching the residual tolerance"""

    def __init__(self, iterations: int, last_residual: float, detail: str = ""):
        self.iterations = iterations
        self.last_residual = last_residual
        text = f"iterations={iterations} last_residual={last_residual:.3e}"
        if detail:
            text += f" {detail}"
        super().__init__(text)


class ConvexityLost(SolveError):
    """Too many nodes away from the boundary lost a positive definite Hessian"""

    def __init__(self, fraction: float, result=None):
        self.fraction = fraction
        self.result = result
        super().__init__(f"non_spd_fraction={fraction:.4f}")


class UnknownCase(MongeAmpereError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


# moving planes

class BarrierDomainError(MongeAmpereError, ValueError):
    pass


class NoEpsilonFound(MongeAmpereError, ValueError):
    pass


# command line

class ConfigError(MongeAmpereError, ValueError):
    pass
