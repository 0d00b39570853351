"""Exception types shared across the library."""


class MswError(Exception):
    """Base class for all library errors."""


class DomainError(MswError, ValueError):
    """An argument violates an operation's contract (wrong range, shape, size)."""


class SpecError(MswError, ValueError):
    """A distribution or kernel specification is invalid or unsupported here."""


class UnsupportedDimensionError(DomainError):
    """The ambient dimension is outside the supported range for this operation."""


class ScaleError(MswError):
    """The input exceeds the supported desk scale of an exact algorithm."""


class NumericError(MswError):
    """A numeric evaluation failed (overflow, non-finite quantile, ...)."""


class ConfigError(MswError, ValueError):
    """An experiment configuration is inconsistent or incomplete."""
