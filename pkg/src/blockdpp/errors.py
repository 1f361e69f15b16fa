"""Shared exception types for numerical contract violations."""


class NotPositiveSemiDefinite(ArithmeticError):
    """A Cholesky pivot fell below the negative tolerance."""


class SingularToTolerance(ArithmeticError):
    """A matrix required to be invertible has a pivot at or below tolerance."""


class NonFinite(ValueError):
    """An input or result contains NaN or infinity."""
