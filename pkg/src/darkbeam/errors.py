"""Exception types shared across the package.

The CLI maps ConfigError to exit code 2 and NumericError (and subclasses)
to exit code 3.
"""


class ConfigError(ValueError):
    """Invalid configuration value or malformed config file."""


class NumericError(RuntimeError):
    """Numerical failure (diagonalization, integration, tracking)."""


class PropagationError(NumericError):
    """TDSE integration failed: step underflow or norm violation."""


class TrackingError(NumericError):
    """Adiabatic branch assignment failed or was ambiguous."""


class StepRefinementNeeded(TrackingError):
    """Two branch overlaps were too close to call; caller should refine the step."""
