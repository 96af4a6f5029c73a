class HalsError(Exception):
    """Base class for package errors."""


class DomainError(HalsError, ValueError):
    """An argument is outside the operation's domain."""


class NumericalError(HalsError, ArithmeticError):
    """A numerical routine failed (singular system, eigensolver failure)."""


class TraceFormatError(HalsError, ValueError):
    """A channel trace file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TraceLengthError(HalsError, ValueError):
    """A channel trace holds fewer samples than requested."""
