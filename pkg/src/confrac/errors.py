"""Exception types shared across the package."""


class ConfracError(Exception):
    """Base class for all package errors."""


class PreconditionError(ConfracError, ValueError):
    """An argument violates the documented precondition of an operation."""


class EvaluationError(ConfracError, ArithmeticError):
    """A user function produced a non-finite or otherwise invalid value.

    ``point`` holds the offending evaluation point (a scalar ``t`` or a
    tuple such as ``(s, x)``) when it is known.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class DivergenceError(ConfracError, RuntimeError):
    """Fixed-point iteration left the admissible region."""
