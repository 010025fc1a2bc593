"""Exception types raised by the solver and its drivers."""


class BGKError(Exception):
    """Base class for all solver errors."""


class InvalidInputError(BGKError, ValueError):
    """An argument is outside its documented domain."""


class DegenerateDensityError(BGKError, ArithmeticError):
    """A population set has non-positive density."""


class BlowUpError(BGKError, ArithmeticError):
    """The simulation produced a non-finite value or breached the density floor.

    Attributes
    ----------
    step : int
        Step index at which the breach was detected.
    node : tuple of int or None
        Grid index ``(ix, iy)`` of the first offending node.
    """

    def __init__(self, message, step=None, node=None):
        super().__init__(message)
        self.step = step
        self.node = node


class ConfigError(BGKError, ValueError):
    """A run configuration is invalid."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class MetricUndefinedError(BGKError, ArithmeticError):
    """An error metric has no nodes to average over."""
