"""Exception types raised across the package."""


class CokeError(Exception):
    """Base class for all library errors."""


class InvalidInput(CokeError, ValueError):
    """Malformed or inconsistent input (shapes, non-finite values, bad config)."""


class EmptyArm(CokeError, ValueError):
    """A treatment arm has no observations in the data handed to a fit."""

    def __init__(self, message: str, split: str | None = None):
        super().__init__(message if split is None else f"{message} (split {split})")
        self.split = split


class NumericalFailure(CokeError, ArithmeticError):
    """A linear solve could not be stabilised."""


class Unsupported(CokeError, NotImplementedError):
    """The requested operation is not defined for this object."""
