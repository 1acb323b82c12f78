"""Exception hierarchy shared by every module in the package."""

from __future__ import annotations


class PathOrderError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(PathOrderError):
    """Malformed external input (edge lists, path files, configs).

    Carries the one-based line number when one is known so that callers
    can point at the offending line.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DomainError(PathOrderError):
    """Input is well formed but outside the domain of the operation."""


class ConstraintViolationError(DomainError):
    """A path uses a node or edge that the network constraint does not allow."""


class CapacityError(PathOrderError):
    """A requested enumeration or count would not fit in 64-bit arithmetic."""


class UsageError(PathOrderError):
    """The caller combined arguments in an unsupported way."""


class MethodUnavailableError(UsageError):
    """A selection method cannot be evaluated for this dataset or graph."""


class NumericError(PathOrderError):
    """An iterative numeric routine failed to converge."""
