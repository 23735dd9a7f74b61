"""
Exceptions Module
-----------------
Error types raised across the solver stack.
Library code raises these; only the command-line handlers catch them.
"""

from typing import Optional


class QGError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(QGError, ValueError):
    """A constructor or operation received an out-of-range parameter."""


class ShapeMismatchError(QGError, ValueError):
    """Array shape does not match the grid it is attached to."""


class GaugeViolationError(QGError, ValueError):
    """A negative horizontal power was applied to a field with a k = 0 component."""


class SingularSystemError(QGError, ArithmeticError):
    """A per-mode banded system could not be factorized."""


class IncompatibleMeanError(QGError, ValueError):
    """Neumann data for the horizontal mean mode is not balanced by the interior source."""


class CFLViolationError(QGError, RuntimeError):
    """The requested time step exceeds the advective stability bound."""

    def __init__(self, dt: float, limit: float) -> None:
        self.dt = dt
        self.limit = limit
        super().__init__(f"time step {dt:.6g} exceeds CFL limit {limit:.6g}")


class NumericalInstabilityError(QGError, FloatingPointError):
    """A state became non-finite during time integration."""


class ConfigParseError(QGError, ValueError):
    """A run file line could not be parsed."""

    def __init__(self, message: str, line_number: Optional[int] = None) -> None:
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(prefix + message)


class ConfigKeyError(QGError, KeyError):
    """A run file names a key that is not part of the documented schema."""

    def __init__(self, key: str, line_number: Optional[int] = None) -> None:
        self.key = key
        self.line_number = line_number
        super().__init__(f"unknown configuration key '{key}'")

    def __str__(self) -> str:
        return self.args[0]


class ConfigRangeError(QGError, ValueError):
    """A configuration value is outside its admissible range."""

    def __init__(self, key: str, message: str) -> None:
        self.key = key
        super().__init__(f"{key}: {message}")


class SnapshotFormatError(QGError, ValueError):
    """A snapshot or checkpoint file is malformed."""


class ManifestHashMismatchError(QGError, RuntimeError):
    """A checkpoint was written by a run with a different manifest."""
