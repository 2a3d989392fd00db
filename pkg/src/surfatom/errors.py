"""Exception hierarchy shared across the package.

Each CLI error category maps onto one branch of this hierarchy so exit
codes can be assigned without string matching.
"""


class SurfatomError(Exception):
    """Base class for all package errors."""


class ParameterError(SurfatomError, ValueError):
    """A physical parameter fails validation (nonpositive mass, R >= 1, ...)."""


class DomainError(SurfatomError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DegeneratePotentialError(ParameterError):
    """The potential has no barrier/well structure for the given parameters."""


class CapacityError(SurfatomError, ValueError):
    """A requested bound level index exceeds the well capacity."""

    def __init__(self, message, capacity=None):
        super().__init__(message)
        self.capacity = capacity


class NumericalError(SurfatomError, RuntimeError):
    """An iterative numerical procedure failed to converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConsistencyError(SurfatomError, ValueError):
    """Inputs that must describe the same system do not match up."""


class ProfileFormatError(ParameterError):
    """A rate-profile file is malformed or violates profile constraints."""


class ConfigError(SurfatomError, ValueError):
    """A run configuration violates the schema."""


class CacheCorruptionError(SurfatomError, RuntimeError):
    """A cache entry failed its integrity check and was invalidated."""
