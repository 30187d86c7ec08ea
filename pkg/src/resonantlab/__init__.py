"""Spectral laboratory for the quintic NLS on R x T^2 and its resonant system."""

__version__ = "0.1.0"


class CapacityError(RuntimeError):
    """Raised when an enumeration would exceed its candidate-check budget."""


class NumericalAbort(RuntimeError):
    """Raised when a time stepper produces non-finite values."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ValidityError(RuntimeError):
    """Raised when a validity monitor (boundary mass, spectral tail) trips."""
