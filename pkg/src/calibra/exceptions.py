"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """An input violates the documented precondition of an operation."""


class TripwireError(RuntimeError):
    """Two computations that must agree by theory disagreed numerically.

    Raised instead of silently returning a verdict; the message carries the
    residuals that triggered it.
    """


class NoWitnessError(PreconditionError):
    """No squeezing witness can exist for the given map."""
