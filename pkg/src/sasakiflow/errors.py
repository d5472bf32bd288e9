"""Exception hierarchy for the sasakiflow package."""


class SasakiflowError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SasakiflowError):
    """Invalid configuration value (grid size, slopes, step controls, config file)."""


class GridMismatchError(SasakiflowError):
    """Fields defined on different grids were combined."""


class InadmissiblePotentialError(SasakiflowError):
    """The density 1 + H0[phi] dropped below the positivity floor.

    Carries the offending node location and the minimum density value.
    """

    def __init__(self, message, y=None, min_density=None):
        super().__init__(message)
        self.y = y
        self.min_density = min_density


class StiffStepError(SasakiflowError):
    """Time stepper could not advance: dt underflowed the configured floor."""

    def __init__(self, message, t=None, dt=None, min_density=None):
        super().__init__(message)
        self.t = t
        self.dt = dt
        self.min_density = min_density


class RenormalizationUnavailableError(SasakiflowError):
    """Gauge renormalization needs an exponentially decaying tail; this run has none."""


class FitUnavailableError(SasakiflowError):
    """Decay-rate fit requested on a window without enough positive samples."""


class EigensolverError(SasakiflowError):
    """Generalized eigensolve failed; carries a condition estimate of the pencil."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class PathTerminationError(SasakiflowError):
    """Newton continuation stalled before t=1; carries the last solved parameter."""

    def __init__(self, message, last_good_t=None, partial_path=None):
        super().__init__(message)
        self.last_good_t = last_good_t
        self.partial_path = partial_path
