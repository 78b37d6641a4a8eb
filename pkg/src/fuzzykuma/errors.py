"""Exception types raised across the package."""


class FuzzyKumaError(Exception):
    """Base class for all package errors."""


class QuadratureError(FuzzyKumaError, ArithmeticError):
    """Adaptive integration failed to reach the requested tolerance."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class DegenerateObservationError(FuzzyKumaError, ArithmeticError):
    """A fuzzy observation has (numerically) zero probability."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class FitError(FuzzyKumaError):
    """An estimator could not produce a result (singular Hessian, bad search, ...)."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class DataFormatError(FuzzyKumaError, ValueError):
    """Input file could not be parsed."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row
