"""Exception types shared across the package."""


class ExcursionLabError(Exception):
    """Base class for package errors."""


class HermiteRangeError(ExcursionLabError, ValueError):
    """Polynomial order outside the supported range."""


class NumericAccuracyError(ExcursionLabError, ArithmeticError):
    """A quadrature or series did not reach its accuracy target.

    The achieved error estimate is kept in ``estimate``.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class DimensionError(ExcursionLabError, ValueError):
    pass


class PoleError(ExcursionLabError, ZeroDivisionError):
    """Evaluation of a density exactly at its singularity."""


class ResourceError(ExcursionLabError, MemoryError):
    """Requested grid exceeds the configured memory cap."""


class ModelError(ExcursionLabError, ValueError):
    """Covariance is not positive semidefinite, or otherwise unusable."""


class DegenerateModelError(ExcursionLabError, ValueError):
    pass


class PreconditionError(ExcursionLabError, ValueError):
    """An experiment was asked to run outside its validity range."""


class AssumptionCheckFailed(PreconditionError):
    """A numerically checked assumption of a limit theorem fails.

    ``ratios`` holds the measured sequence that failed the check.
    """

    def __init__(self, message, ratios=None):
        super().__init__(message)
        self.ratios = ratios


class ResolutionError(ExcursionLabError, ArithmeticError):
    """Frequency grid too coarse for the requested accuracy."""

    def __init__(self, message, discrepancy=None):
        super().__init__(message)
        self.discrepancy = discrepancy


class TooFewSamplesError(ExcursionLabError, ValueError):
    pass


class NonFiniteValueError(ExcursionLabError, ArithmeticError):
    """A pointwise functional produced inf or nan."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node
