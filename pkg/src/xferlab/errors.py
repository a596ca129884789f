"""Exception types raised by xferlab."""


class XferlabError(Exception):
    """Base class for all library errors."""


class InvalidInput(XferlabError, ValueError):
    """Bad shapes, non-finite entries or violated preconditions."""


class NotPsd(InvalidInput):
    """A matrix expected to be positive semi-definite has a negative eigenvalue."""


class TrainingDiverged(XferlabError, ArithmeticError):
    """Gradient descent produced a non-finite loss."""


class NumericalInconsistency(XferlabError, ArithmeticError):
    """A closed-form quantity came out negative beyond rounding slack."""
