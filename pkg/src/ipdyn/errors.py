"""Exception types shared across the package."""


class IpdynError(Exception):
    """Base class for package errors."""


class InvalidInputError(IpdynError, ValueError):
    """An argument violates a documented precondition or invariant."""


class NumericalFailureError(IpdynError, RuntimeError):
    """A numerical routine could not complete within its contract.

    ``partial`` carries whatever trajectory was computed before the failure,
    or None.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
