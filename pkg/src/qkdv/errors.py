"""Exception hierarchy shared by all qkdv modules."""


class QkdvError(Exception):
    """Base class for all qkdv failures."""


class ConfigurationError(QkdvError):
    """Invalid parameter, grid setup, or config file content."""


class GridMismatchError(QkdvError):
    """Operation on fields attached to different grids."""


class NonIntegrableSourceError(QkdvError):
    """Periodic antiderivative requested for a source with nonzero mean."""


class ClosureFailureError(QkdvError):
    """Newton iteration for the electron closure did not converge."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class VacuumError(QkdvError):
    """A density iterate or state left the positive-density region."""


class GuardTripError(QkdvError):
    """A runtime guard (density window, velocity bound, gradient) tripped."""

    def __init__(self, message, time=None, shock_time_estimate=None):
        super().__init__(message)
        self.time = time
        self.shock_time_estimate = shock_time_estimate


class TimeAlignmentError(QkdvError):
    """Trajectories or sources do not cover / align with requested times."""


class FitFailureError(QkdvError):
    """Not enough data points (or periods) for a requested fit."""


class IOFailureError(QkdvError):
    """Artifact read/write failure, with path context in the message."""
