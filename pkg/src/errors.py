"""Exception hierarchy shared by every module.

Each error carries a human readable ``detail`` and the process ``exit_code`` the
CLI maps it to (0 success, 1 error, 2 infeasible, 3 refinement advised).
"""
from typing import Any, Optional


class BLError(Exception):
    exit_code: int = 1

    def __init__(self, detail: str, *, path: Optional[str] = None, **context: Any):
        super().__init__(detail)
        self.detail = detail
        self.path = path
        self.context = context

    def __str__(self) -> str:
        if self.path:
            return f"{self.detail} [at {self.path}]"
        return self.detail


class InputError(BLError, ValueError):
    """Malformed or out-of-domain input."""


class ParseError(InputError):
    """Instance or grid file could not be parsed."""


class CapacityError(BLError):
    """Exhaustive enumeration beyond the documented envelope."""


class NumericDomainError(BLError):
    """Matrix outside the domain of a factorization (indefinite, singular)."""

    def __init__(self, detail: str, *, eigenvalue: Optional[float] = None, direction: Any = None, **kwargs: Any):
        super().__init__(detail, **kwargs)
        self.eigenvalue = eigenvalue
        self.direction = direction


class LogicError(BLError):
    """Operation called outside its precondition in a way that signals a caller bug."""


class InfeasibleError(BLError):
    exit_code = 2

    def __init__(self, detail: str, *, violation: Any = None, **kwargs: Any):
        super().__init__(detail, **kwargs)
        self.violation = violation


class ConsistencyError(BLError):
    """Two computations that must agree did not."""


class AccuracyError(BLError):
    exit_code = 3


class PreconditionError(BLError):
    """A checked mathematical hypothesis (frame condition, scaling) fails."""


class NotTotallyReducibleError(BLError):
    def __init__(self, detail: str, *, report: Any = None, **kwargs: Any):
        super().__init__(detail, **kwargs)
        self.report = report


class NumericError(BLError):
    """Iterative solver failed to converge."""

    def __init__(self, detail: str, *, history: Optional[list[float]] = None, **kwargs: Any):
        super().__init__(detail, **kwargs)
        self.history = list(history or [])
