"""Exception types shared across the package."""


class SearchError(Exception):
    """Base class for all errors raised by this package."""


class PrecisionError(SearchError):
    """Requested mantissa width is below the supported minimum."""


class DomainError(SearchError):
    """An argument lies outside the mathematical domain of an operation."""


class SequenceError(SearchError):
    """An evasiveness schedule violates the zigzag admissibility rules.

    Carries ``index``, the schedule position at which the violation was
    detected (``None`` for format-level problems).
    """

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class HorizonExhausted(SearchError):
    """No qualifying round exists within the requested round horizon."""

    def __init__(self, message: str, horizon: int):
        super().__init__(message)
        self.horizon = horizon


class TrajectoryError(SearchError):
    """A trajectory fails the structural validity rules."""
