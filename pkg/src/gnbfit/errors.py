"""Exception types shared across the package."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not converge within its evaluation budget.

    Carries the best available value and error estimate so callers can decide
    whether the partial result is still usable.
    """

    def __init__(self, message, value=None, abs_error_estimate=None, evaluations=0):
        super().__init__(message)
        self.value = value
        self.abs_error_estimate = abs_error_estimate
        self.evaluations = evaluations


class DegenerateDataError(ValueError):
    """Raised when data has no usable spread (zero variance or zero IQR)."""


class ParseError(ValueError):
    """Raised on malformed input files; ``line`` is the 1-based line number."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class EstimationError(RuntimeError):
    """Raised when a fit cannot be carried out at all."""
