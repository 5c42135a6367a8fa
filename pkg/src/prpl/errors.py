"""Error types raised across the package.

Everything derives from ValueError so callers that only care about "bad
input" can catch one class, while tests can assert the precise failure.
"""


class EmptyStructureError(ValueError):
    """Sampling was requested from a structure holding no probability mass."""


class DegenerateDistributionError(ValueError):
    """A priority vector summed to zero, leaving no sampling distribution."""


class ZeroDeltaError(ValueError):
    """An error-set statistic is undefined because some |delta| is zero."""


class SignMismatchError(ValueError):
    """A loss/priority pairing would require a negative priority."""
