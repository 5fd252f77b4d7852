"""Exception types shared across the package."""


class GplabError(Exception):
    """Base class for all package-specific errors."""


class DomainError(GplabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(GplabError, ValueError):
    """A model, grid, or run configuration is invalid or unsupported."""


class GridMismatchError(ConfigurationError):
    """Two objects live on incompatible grids."""


class SolverError(GplabError, RuntimeError):
    """A numerical routine failed to produce a trustworthy result."""


class ConvergenceError(SolverError):
    """An iteration reached its cap before meeting its tolerance."""
