"""Exception types shared across the library."""


class FisherFlowError(Exception):
    """Base class for library-specific failures."""


class OrthantExitError(FisherFlowError, ArithmeticError):
    """A manifold operation produced coordinates below the orthant tolerance.

    Raised instead of silently clipping so that integration bugs surface at
    the point where the step size became invalid.
    """


class NumericalDomainError(FisherFlowError, ArithmeticError):
    """An operation was evaluated outside its numerical domain.

    Typical cause: a Fisher-Rao metric evaluation at a point with coordinates
    below the interior threshold (the caller must smooth first).
    """


class NonFiniteError(FisherFlowError, ArithmeticError):
    """A computation produced NaN or infinity."""
