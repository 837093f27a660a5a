"""Exception types raised across the package."""


class SepNMFError(Exception):
    """Base class for all package errors."""


class InvalidInputError(SepNMFError, ValueError):
    """Input data violates a precondition (non-finite, negative, bad shape)."""


class ParseError(InvalidInputError):
    """A data file could not be parsed.

    ``line`` is the 1-based line number of the offending line, when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ScaleLimitError(SepNMFError):
    """The requested LP exceeds what the simplex backend is meant to handle."""


class DegenerateSolutionError(SepNMFError):
    """A solver finished but its output does not identify a factorization."""


class LPFailure(SepNMFError):
    """An LP that should be solvable came back infeasible, unbounded, or capped."""

    def __init__(self, message, status=None):
        self.status = status
        super().__init__(message)


class ConcurrencyError(SepNMFError):
    """Outputs that must agree across thread counts did not."""
