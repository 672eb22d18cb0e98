"""
Error Hierarchy for epflow

All failures raised by the library derive from EpflowError so that the
command-line entry point can map them onto exit codes in one place:

    ConfigError       -> exit 1
    NumericalError    -> exit 2
    ParameterError    -> exit 1 when raised while building a run from config
"""

from typing import Optional


class EpflowError(Exception):
    """Base class for all epflow errors."""


class ParameterError(EpflowError, ValueError):
    """Invalid argument passed to a grid, factory, or diagnostic."""


class UnsupportedDimension(ParameterError):
    """Operation is not available in the requested spatial dimension."""

    def __init__(self, d: int, operation: str, supported: str = "1, 2, 3"):
        self.d = d
        self.operation = operation
        super().__init__(f"{operation} supports d in {{{supported}}}, got d={d}")


class ConfigError(EpflowError):
    """Configuration file could not be parsed or failed validation."""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        self.message = message
        super().__init__(str(self))

    def __str__(self) -> str:
        location = []
        if self.field:
            location.append(f"field '{self.field}'")
        if self.line is not None:
            location.append(f"line {self.line}")
        if location:
            return f"{self.message} ({', '.join(location)})"
        return self.message


class NumericalError(EpflowError):
    """Base class for failures of the numerical machinery."""


class NumericalFault(NumericalError):
    """A field acquired non-finite values."""


class SingularMatrixError(NumericalError):
    """The banded Helmholtz system has a zero pivot."""


class FitFailure(NumericalError):
    """The blowup-time extrapolation could not be performed."""


class MonotonicityViolation(NumericalError):
    """A quantity that must be nondecreasing decreased beyond tolerance."""

    def __init__(self, message: str, t: Optional[float] = None):
        self.t = t
        super().__init__(message)


class ConstructionFailure(NumericalError):
    """An assembled initial datum violates the conditions it was built for."""


class NegativityFailure(NumericalError):
    """Backward-constructed data is not strictly negative."""

    def __init__(self, message: str, radius: float):
        self.radius = radius
        super().__init__(f"{message} (at r={radius:.6g})")
