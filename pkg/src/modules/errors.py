"""Exception types shared by the analyzer modules"""

from typing import Iterable, Optional


class ProgramSyntaxError(ValueError):
    """Raised when program text does not match the grammar"""

    def __init__(
        self,
        message: str,
        line: int = 0,
        column: int = 0,
        expected: Iterable[str] = (),
        context: Optional[str] = None
    ):
        self.line = line
        self.column = column
        self.expected = tuple(sorted(set(expected)))
        self.context = context
        where = f"line {line}, column {column}" if line else "end of input"
        detail = f"{message} at {where}"
        if self.expected:
            detail += f"; expected one of: {', '.join(self.expected)}"
        super().__init__(detail)


class UnboundVariableError(ValueError):
    """Raised by the scope check for a variable with no binder"""

    def __init__(self, name: str, where: str = "program"):
        self.name = name
        super().__init__(f"Unbound variable '{name}' in {where}")


class UnknownModuleError(ValueError):
    """Raised when `open NAME;;` cannot be resolved"""

    def __init__(self, name: str, searched: Iterable[str] = ()):
        self.name = name
        searched = list(searched)
        message = f"Unknown module '{name}'"
        if searched:
            message += f" (searched: {', '.join(searched)})"
        super().__init__(message)


class UnknownFixtureError(KeyError):
    """Raised for a fixture name missing from the catalogue"""

    def __init__(self, name: str, available: Iterable[str]):
        self.name = name
        self.available = sorted(available)
        super().__init__(name)

    def __str__(self) -> str:
        return f"Unknown fixture '{self.name}'. Available: {', '.join(self.available)}"


class PredicateSyntaxError(ValueError):
    """Raised when a predicate does not parse or uses an unbound name"""


class ResourceGuardError(RuntimeError):
    """Base class for analyses stopped by a configured size guard"""


class MemoLimitExceeded(ResourceGuardError):
    """The exact engine's memo tables outgrew the configured limit"""

    def __init__(self, limit: int, entries: int, horizon: Optional[int], last_value=None):
        self.limit = limit
        self.entries = entries
        self.horizon = horizon
        self.last_value = last_value
        where = "in the unbounded graph" if horizon is None else f"at horizon {horizon}"
        message = f"Memo limit {limit} exceeded ({entries} entries) {where}"
        if last_value is not None:
            message += f"; last completed value {last_value}"
        super().__init__(message)


class EnumerationLimitExceeded(ResourceGuardError):
    """A brute-force enumeration would exceed the configured size"""

    def __init__(self, size: int, limit: int):
        self.size = size
        self.limit = limit
        super().__init__(f"Enumeration of {size} cases exceeds limit {limit}")
