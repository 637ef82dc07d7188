"""Exception hierarchy shared by all analysis modules.

Every error carries an ``exit_code`` so the command-line front end can map
failures to process status without inspecting messages.
"""

from __future__ import annotations


class FleetcapError(Exception):
    exit_code = 2


class ParseError(FleetcapError, ValueError):
    """Malformed input text; ``line`` is the 1-based physical line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(FleetcapError, ValueError):
    pass


class InsufficientDataError(ValidationError):
    pass


class DegenerateInputError(FleetcapError, ValueError):
    """A denominator (total, base value, variance) is zero."""


class UndefinedRatioError(DegenerateInputError):
    pass


class SingularFitError(FleetcapError, ArithmeticError):
    exit_code = 4

    def __init__(self, message: str, columns: tuple[str, ...] = ()):
        self.columns = tuple(columns)
        if columns:
            message = f"{message} (columns: {', '.join(columns)})"
        super().__init__(message)


class NoExtremumError(FleetcapError, ArithmeticError):
    exit_code = 4
