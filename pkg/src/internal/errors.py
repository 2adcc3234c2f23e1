"""
Exception types raised by ceforge. All derive from ValueError so callers that only
care about bad input can catch that.
"""
from typing import Any, Optional


class CEForgeError(ValueError):
    pass


class BoundExceeded(CEForgeError):
    def __init__(self, what: str, size: int, bound: int):
        super().__init__(f"{what}: size {size} exceeds bound {bound}")
        self.what = what
        self.size = size
        self.bound = bound


class NotJoinIrreducible(CEForgeError):
    pass


class NotConvex(CEForgeError):
    pass


class NotADownSet(CEForgeError):
    pass


class NotNested(CEForgeError):
    pass


class NotADifferential(CEForgeError):
    pass


class NotAChainMap(CEForgeError):
    pass


class NotInvertible(CEForgeError):
    pass


class HypothesisViolated(CEForgeError):
    pass


class PreconditionFailed(CEForgeError):
    def __init__(self, message: str, column: Optional[int] = None):
        super().__init__(message if column is None else f"{message} (column {column})")
        self.column = column


class LadderNotCommuting(CEForgeError):
    pass


class AgreementFailure(CEForgeError):
    def __init__(self, message: str, block: Optional[Any] = None):
        super().__init__(message if block is None else f"{message} (block {block})")
        self.block = block


class CEIsoInconsistent(CEForgeError):
    pass


class NotAField(CEForgeError):
    pass


class GradingMismatch(CEForgeError):
    pass


class ParseError(CEForgeError):
    def __init__(self, message: str, line: int = 0, column: int = 0, expected: str = ""):
        where = f"line {line}, column {column}: " if line else ""
        tail = f" (expected {expected})" if expected else ""
        super().__init__(f"{where}{message}{tail}")
        self.line = line
        self.column = column
        self.expected = expected


class ValidationError(CEForgeError):
    def __init__(self, invariant: str, message: str, line: int = 0):
        where = f"line {line}: " if line else ""
        super().__init__(f"{where}{invariant}: {message}")
        self.invariant = invariant
        self.line = line
