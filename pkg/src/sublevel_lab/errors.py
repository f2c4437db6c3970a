"""Exception hierarchy shared by all modules."""


class SublevelLabError(Exception):
    """Base class for every error raised by this package."""


class PhaseValidationError(SublevelLabError):
    """A phase violates a standing hypothesis and no override was given."""


class RootFindingError(SublevelLabError):
    """Bracketed inversion failed (target outside the bracket or no convergence)."""


class OutOfRangeError(SublevelLabError):
    """A height or frequency falls outside the range covered by a table."""


class GeometryError(SublevelLabError):
    """Sublevel sets are not compactly contained in the domain."""


class MonotonicityError(SublevelLabError):
    """A map that must be strictly monotone was found not to be."""


class QuadratureError(SublevelLabError):
    """Adaptive quadrature hit its refinement limit before converging.

    The partial result is attached as ``.result`` so callers can record it.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ConfigError(SublevelLabError):
    """Experiment configuration could not be parsed or validated."""
