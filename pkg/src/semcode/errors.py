"""Exception hierarchy shared by every module.

Configuration-type failures derive from :class:`InvalidParameterError`
(a ``ValueError``); numerical failures derive from :class:`NumericalError`.
The CLI maps the two families to exit codes 2 and 3.
"""


class SemcodeError(Exception):
    """Root of all package errors."""


class InvalidParameterError(SemcodeError, ValueError):
    """A parameter is outside its documented domain."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class DomainError(InvalidParameterError):
    """A function was evaluated outside its mathematical domain."""


class NumericalError(SemcodeError, ArithmeticError):
    """A well-posed computation failed numerically."""


class UnsupportedCaseError(NumericalError):
    pass


class DegenerateObjectiveError(NumericalError):
    pass


class NoSolutionError(NumericalError):
    pass


class ConstraintViolationError(NumericalError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NumericRangeError(NumericalError):
    pass


class InvalidLengthsError(InvalidParameterError):
    pass


class InvalidSymbolError(InvalidParameterError):
    pass


class CorruptStreamError(SemcodeError, ValueError):
    pass


class SweepFailureError(NumericalError):
    pass


class CalibrationError(NumericalError):
    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)
