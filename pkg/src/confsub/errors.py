"""Exception hierarchy shared by all modules."""


class ConfsubError(Exception):
    """Base class for every error raised by this package."""


class PreconditionError(ConfsubError, ValueError):
    """An operation was called with arguments outside its domain."""


class DegenerateFrameError(ConfsubError):
    """Gram-Schmidt met a (numerically) linearly dependent vector."""


class SingularMetricError(ConfsubError):
    """The metric is not invertible (or not positive definite) at a point."""


class UnsupportedDimensionError(ConfsubError):
    """The requested quantity is not defined in this dimension."""


class DegeneratePlaneError(ConfsubError):
    """Sectional curvature requested on a degenerate 2-plane."""


class NotASubmersionError(ConfsubError):
    """The projection Jacobian is rank deficient."""


class InvalidSpecError(ConfsubError):
    """A submersion spec fails its defining (conformality) condition."""


class ConfigurationError(ConfsubError):
    """Unknown model, invalid parameters or malformed run configuration."""


class ModelConstructionError(ConfsubError):
    """A built-in model failed its self-verification at load time."""


class UsageError(ConfsubError):
    """A command-line request names something that does not exist."""
