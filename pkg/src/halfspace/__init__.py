"""Numerical laboratory for walks conditioned to stay non-negative.

Exact discrete kernels, conditioned-walk samplers, continuum meander
kernels, half-space polymer partition functions, a chaos/Picard solver for
the half-space stochastic heat equation and the statistics used to check
them against each other.
"""

from .backend import core as backend_core
from .discrete_kernels import KernelWorkspace, audit_bound
from .errors import (ConfigError, DomainError, HalfspaceError, NumericalError,
                     RangeError, StatisticalError)
from .rng import RngStream

__version__ = "0.1.0"

__all__ = [
    "KernelWorkspace",
    "audit_bound",
    "RngStream",
    "backend_core",
    "HalfspaceError",
    "RangeError",
    "DomainError",
    "ConfigError",
    "StatisticalError",
    "NumericalError",
]
