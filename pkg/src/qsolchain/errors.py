"""Exception hierarchy shared by all qsolchain modules."""


class QSolChainError(Exception):
    """Base class for every error raised by this package."""


class NumericalError(QSolChainError, ArithmeticError):
    """A computation produced an unusable numerical result."""


class NotHermitian(QSolChainError, ValueError):
    pass


class NotPSD(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class DimensionMismatch(QSolChainError, ValueError):
    pass


class InvalidGridSize(QSolChainError, ValueError):
    pass


class DomainError(QSolChainError, ValueError):
    pass


class ChainTooShort(QSolChainError, ValueError):
    pass


class StepTooLarge(QSolChainError, ValueError):
    pass


class NonFinite(NumericalError):
    pass


class NoSoliton(NumericalError):
    pass


class NonNormalizable(NumericalError):
    pass


class ParseError(QSolChainError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class ValidationError(QSolChainError, ValueError):
    def __init__(self, key, message=""):
        self.key = key
        super().__init__(f"{key}: {message}" if message else key)
