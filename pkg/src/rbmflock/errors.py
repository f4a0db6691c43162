class RbmError(Exception):
    """Base class for all package errors."""


class DomainError(RbmError, ValueError):
    """An argument is outside the domain of the operation."""


class ConfigError(RbmError, ValueError):
    """A configuration violates an invariant; the message names it."""


class ValidationError(RbmError):
    """Numerical validation produced an unusable value (e.g. NaN)."""


class BlowupError(RbmError, FloatingPointError):
    """A time step produced non-finite state."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite state after step {step}")
