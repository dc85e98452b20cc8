"""Exception types shared across the package."""


class SpecpartError(Exception):
    """Base class for all package errors."""


class ConfigError(SpecpartError):
    """Invalid configuration or inputs (CLI exit code 2)."""


class EmptyMask(SpecpartError):
    """A region or mask operation produced no interior points."""


class GridMismatch(SpecpartError):
    """Two masks or fields live on different grids."""


class BadRadii(SpecpartError):
    """Ring radii are not strictly interleaved r1 < R1 < r2 < R2 < ..."""


class ZeroField(SpecpartError):
    """A field is identically zero where a nonzero one is required."""


class NoConvergence(SpecpartError):
    """An iterative solve failed to meet its residual contract."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class InsufficientSweep(SpecpartError):
    """A Persson sweep has too few radii to extrapolate."""


class OverlappingCells(SpecpartError):
    """Partition cells share at least one interior grid point."""


class CellCollapse(SpecpartError):
    """A partition cell emptied and could not be reseeded."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NotConverged(SpecpartError):
    """An operation requires a converged partition state."""


class WindowTooSmall(SpecpartError):
    """The truncation window cannot host the requested construction."""


class BracketInvalid(SpecpartError):
    """Parameters violate the bracketing precondition of a root solve."""
