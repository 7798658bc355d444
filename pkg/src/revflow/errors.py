"""Exception types shared across the package."""


class RevflowError(Exception):
    """Base class for all package errors."""


class InvalidSequenceError(RevflowError, ValueError):
    """A Carleman sequence is non-positive or decreasing."""


class InvalidProfileError(RevflowError, ValueError):
    """A profile violates one of the surface conditions."""

    def __init__(self, message, theta=None):
        super().__init__(message)
        self.theta = theta


class NumericalError(RevflowError, ArithmeticError):
    """A quadrature, integration or root search failed to converge."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class InsufficientEventsError(RevflowError, ValueError):
    """A trajectory has too few events for the requested estimate."""


class FiniteDifferenceError(NumericalError):
    """Finite-difference derivatives are dominated by noise."""


class NoInteriorMinimumError(NumericalError):
    """The displacement has no strict minimum inside the search window."""
