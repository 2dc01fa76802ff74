"""Exception types shared by all modules."""

__all__ = [
    "KaramataError",
    "DomainError",
    "ParameterError",
    "BracketError",
    "MonotonicityError",
    "InsufficientDataError",
    "SingularityError",
    "UnsupportedError",
    "AccuracyError",
    "UnderflowError",
]


class KaramataError(Exception):
    """Base class for every error raised by this package."""


class DomainError(KaramataError, ValueError):
    """An argument lies outside the domain of the function."""


class ParameterError(KaramataError, ValueError):
    """A configuration or parameter value is invalid."""


class BracketError(KaramataError, ValueError):
    """A root-finding bracket does not enclose a sign change."""


class MonotonicityError(KaramataError, ValueError):
    """A function expected to be monotone was observed not to be."""


class InsufficientDataError(KaramataError):
    """Too few usable samples to produce an estimate."""


class SingularityError(KaramataError, ArithmeticError):
    """An integrand or inverse became non-finite."""


class UnsupportedError(KaramataError, NotImplementedError):
    """The requested combination of options is not supported."""


class AccuracyError(KaramataError, ArithmeticError):
    """A numerical routine failed to reach the requested tolerance.

    Attributes
    ----------
    estimate : float
        Best estimate available when the routine gave up.
    error : float
        Estimated absolute error of ``estimate``.
    """

    def __init__(self, message, estimate=float("nan"), error=float("inf")):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class UnderflowError(KaramataError, ArithmeticError):
    """A quantity fell below the representable floating-point range.

    Attributes
    ----------
    bracket : tuple of float
        Last valid bracket ``(lo, hi)`` in the natural log of the quantity.
    """

    def __init__(self, message, bracket=(float("-inf"), float("nan"))):
        super().__init__(message)
        self.bracket = bracket
