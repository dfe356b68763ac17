"""Exception types shared across the toolkit."""


class InvalidParameterError(ValueError):
    """A model or scenario parameter is outside its admissible range."""


class DegenerateObjectiveError(RuntimeError):
    """The threshold objective is identically zero (uninformative sensor)."""


class NetworkSizeError(ValueError):
    """Too many sensors for exact enumeration of the outcome space."""
