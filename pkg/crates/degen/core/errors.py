"""Exception types for degen"""
from typing import Any, Optional


class DegenError(Exception):
    """Base class for every error raised by degen"""


class DomainError(DegenError, ValueError):
    """A mathematical precondition does not hold (exponent range, asymptote, ...)"""


class ConfigurationError(DegenError, ValueError):
    """Invalid mesh or solver settings"""


class AssemblyError(DegenError, RuntimeError):
    """The assembled stiffness matrix is not symmetric positive definite"""


class NonConvergenceError(DegenError, RuntimeError):
    """Picard iteration stopped without meeting its tolerance.

    The partial result is attached so callers can still export it.
    """

    def __init__(self, message: str, result: Optional[Any] = None):
        super().__init__(message)
        self.result = result
