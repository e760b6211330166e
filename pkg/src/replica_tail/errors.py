"""Exception types shared across the package.

The CLI maps these onto exit codes: ``ValueError`` (and subclasses) -> 2,
``ResourceLimitError`` / ``InfeasibleError`` -> 3, ``ConvergenceError`` -> 4.
"""

from __future__ import annotations


class HypergraphFormatError(ValueError):
    """Malformed serialized input; ``location`` names the offending element."""

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)


class NoBreakingPossible(ValueError):
    """Raised when a symmetry-breaking certificate is requested at a symmetric point."""


class ResourceLimitError(RuntimeError):
    """Requested computation exceeds a documented size budget."""


class InfeasibleError(Exception):
    """The constraint set of an optimization problem is empty."""


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residuals=None):
        self.residuals = residuals
        super().__init__(message)
