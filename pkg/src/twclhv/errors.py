class TwcError(Exception):
    """Base class for errors raised by this package."""


class InvalidInput(TwcError, ValueError):
    pass


class UndefinedVisibility(InvalidInput):
    """Visibility requested for an event with k == l and r == s."""


class TruncationError(TwcError):
    """A cutoff is too small to certify the omitted probability mass."""

    def __init__(self, message: str, achievable_bound: float):
        super().__init__(message)
        self.achievable_bound = achievable_bound


class DegenerateCorrelation(TwcError):
    pass


class QuadratureError(TwcError):
    pass


class ModelInvalid(TwcError):
    """A submodel weight of the hidden-variable model would be negative."""

    def __init__(self, message: str, event, alpha_sq: float, value: float):
        super().__init__(message)
        self.event = event
        self.alpha_sq = alpha_sq
        self.value = value
