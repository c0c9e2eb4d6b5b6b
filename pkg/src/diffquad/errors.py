"""Exception types raised by diffquad."""


class DiffquadError(Exception):
    """Base class for all library errors."""


class InvalidArgument(DiffquadError, ValueError):
    pass


class SpectrumExhausted(DiffquadError):
    """The stored spectrum cannot support the requested computation."""


class RejectedEigenData(DiffquadError, ValueError):
    pass


class NumericFailure(DiffquadError, ArithmeticError):
    pass
