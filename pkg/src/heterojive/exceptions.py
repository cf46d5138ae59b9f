"""Exception types shared across the package."""


class JiveError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(JiveError, ValueError):
    """An argument violates a documented precondition."""


class RankDeficient(JiveError):
    """A matrix that must have full column rank does not."""


class DegenerateAggregation(JiveError):
    """The aggregation spectrum has no usable eigenvalue gap at the requested rank."""

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class ThetaTooSmall(JiveError):
    """The misalignment level is below the floor where the weighting maps are well posed."""

    def __init__(self, message, theta=None):
        super().__init__(message)
        self.theta = theta


class BoundaryPoint(JiveError):
    """A weight vector sits on the simplex boundary where an interior check is undefined."""


class DegenerateInput(JiveError):
    """Input data carries no usable variation for the requested computation."""
