"""Exception types raised across the package."""


class InvalidArgumentError(ValueError):
    """Input violates an operation's precondition (non-finite, non-unit, ...)."""


class ConfigurationError(ValueError):
    """A configuration object or scene description is inconsistent."""


class DegenerateFrameError(ValueError):
    """Directions are zero or parallel, so no rotation frame can be built."""


class DegenerateAxisError(ValueError):
    """Requested percentile axis has a zero eigenvalue gap."""


class ConvergenceError(RuntimeError):
    """An iterative kernel hit its iteration cap."""


class SamplingError(RuntimeError):
    """Rejection sampler exceeded its proposal budget."""
