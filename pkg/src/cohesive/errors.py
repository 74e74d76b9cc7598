"""Exception hierarchy shared by every module of the package."""


class CohesiveError(Exception):
    """Base class for all errors raised by :mod:`cohesive`."""


class DimensionError(CohesiveError, ValueError):
    """Array shapes do not agree with the probability space or with each other."""


class ValidationError(CohesiveError, ValueError):
    """A constructor invariant failed. The message names the invariant."""


class ConfigurationError(ValidationError):
    """A scenario set is empty or otherwise unusable."""


class PreconditionError(CohesiveError, ValueError):
    """An operation was called outside of its domain."""


class SizeError(CohesiveError, ValueError):
    """An exhaustive routine was asked to work on an instance that is too large."""
