class InputError(ValueError):
    """Invalid arguments: shapes, ranges, malformed files."""


class DegenerateCovarianceError(InputError):
    """The limiting covariance is singular, so the bound is undefined."""


class NumericalError(ArithmeticError):
    """A computation hit a numerically meaningless regime (e.g. zero denominator)."""
