"""Exception hierarchy shared by all maxcon modules."""


class MaxconError(Exception):
    """Base class for every error raised by maxcon."""


class DimensionError(MaxconError, ValueError):
    """Operand shapes do not agree."""


class ValidationError(MaxconError, ValueError):
    """Invalid grid, boundary, material or configuration input."""


class ConvergenceError(MaxconError, RuntimeError):
    """An iterative solver hit its iteration limit.

    Attributes:
        residual: relative residual at the last iterate.
        iterations: number of iterations performed.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class DenseCapError(MaxconError, ValueError):
    """A dense oracle was asked to handle more rows than its cap."""


class NotPositiveDefiniteError(MaxconError, ValueError):
    """A matrix required to be SPD failed its Cholesky factorization."""


class NoPositiveSpectrumError(MaxconError, ValueError):
    """The operator vanishes on the whole space, so no positive eigenvalue exists."""
