"""Exception types shared by all modules."""


class HalfspaceError(Exception):
    """Base class for package errors."""


class RangeError(HalfspaceError, IndexError):
    """A time or site index lies outside a precomputed table."""


class DomainError(HalfspaceError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(HalfspaceError, ValueError):
    """A run configuration is invalid or unknown."""


class StatisticalError(HalfspaceError, ValueError):
    """A statistical test cannot be evaluated on the given samples."""


class NumericalError(HalfspaceError, ArithmeticError):
    """A numerical procedure failed to converge."""
