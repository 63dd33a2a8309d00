class KbiqError(Exception):
    """Base class for errors raised by this package."""


class DomainError(KbiqError, ValueError):
    pass


class IndexOutOfRangeError(KbiqError, IndexError):
    pass


class ParameterError(KbiqError, ValueError):
    pass


class SingularMatrixError(KbiqError, ArithmeticError):
    """Raised when an LU factorization meets a (numerically) zero pivot."""

    def __init__(self, pivot_index, message=None):
        self.pivot_index = pivot_index
        super().__init__(message or f"matrix is singular at pivot {pivot_index}")


class SamplerStallError(KbiqError, RuntimeError):
    pass


class PreconditionError(KbiqError, ValueError):
    pass


class ConsistencyError(KbiqError, ArithmeticError):
    pass
