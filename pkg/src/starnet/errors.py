class StarError(Exception):
    """Base class for package errors."""


class ValidationError(StarError, ValueError):
    """Bad input: wrong shapes, malformed files, invalid configuration."""


class NumericalError(StarError, ArithmeticError):
    """A computation produced non-finite values or an unfactorizable matrix."""
