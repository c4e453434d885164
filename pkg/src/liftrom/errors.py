"""Exception hierarchy shared by all liftrom modules."""


class LiftromError(Exception):
    """Base class for every error raised by the package."""


class InputError(LiftromError, ValueError):
    """Malformed or out-of-domain input."""


class GeometryError(LiftromError):
    """Deformed geometry is invalid (e.g. self-intersecting section)."""


class FitError(LiftromError):
    """A linear system or factorization could not be solved reliably."""


class MorphConfigError(LiftromError):
    """Mesh morphing configuration would violate exactness at the wing."""


class DegenerateDataError(LiftromError):
    """Data carry no usable information (e.g. all singular values zero)."""


class ConfigError(LiftromError):
    """Invalid pipeline configuration file."""


class GradientProviderError(LiftromError):
    """A gradient provider failed at a given (sample, time)."""


class PipelineError(LiftromError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
