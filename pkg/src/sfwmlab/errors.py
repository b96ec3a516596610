"""Exception types, mapped to CLI exit codes by sfwmlab.cli."""


class ConfigError(ValueError):
    """Invalid configuration: bad value, bad schema, or inconsistent fields."""

    exit_code = 2


class InconsistentMeasurementError(ValueError):
    """A calibration input violates a bound implied by the model."""

    exit_code = 3


class NumericsError(RuntimeError):
    """A numerical procedure could not produce a result."""

    exit_code = 4


class ExtrapolationError(NumericsError):
    """A lookup fell outside the tabulated domain; no silent extrapolation."""


class PowerSolveError(NumericsError):
    """The requested operating point is unreachable on the monotone branch."""
