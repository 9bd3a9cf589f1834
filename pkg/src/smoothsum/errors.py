"""Shared exception types. CLI exit codes map onto these classes."""


class SmoothsumError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(SmoothsumError):
    """Invalid configuration value (bad dims, out-of-range epsilon, ...)."""


class DataError(SmoothsumError):
    """Malformed or insufficient input data."""


class NumericError(SmoothsumError):
    """Numeric failure during computation (NaN loss, degenerate softmax)."""


class MiniParseError(DataError):
    """Syntax error in the mini function language or an s-expression."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column
