"""Exception hierarchy shared by all herbvec modules."""


class HerbvecError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(HerbvecError):
    """Invalid configuration value or unusable parameter combination."""


class DataError(HerbvecError):
    """Malformed input data: corpus lines, file formats, unknown tokens."""


class CheckpointError(DataError):
    """Unreadable or inconsistent checkpoint file."""


class ZeroVectorError(HerbvecError):
    """Similarity requested against a zero-norm vector."""


class ConvergenceError(HerbvecError):
    """Iterative factorization did not reach the requested residual bound.

    Carries the residuals achieved so far in the ``residuals`` attribute.
    """

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class TrainingError(HerbvecError):
    """Non-finite loss or gradient encountered while fitting a model."""
