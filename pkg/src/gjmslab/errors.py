"""Exception hierarchy shared by all modules."""


class GJMSError(Exception):
    """Base class for library errors."""


class DomainError(GJMSError, ValueError):
    pass


class PoleError(GJMSError, ArithmeticError):
    pass


class AmbiguousPole(PoleError):
    """Both numerator and denominator Gamma arguments sit on poles."""


class ConvergenceError(GJMSError, ArithmeticError):
    pass


class GridMismatch(GJMSError, ValueError):
    pass


class NonPositiveValue(GJMSError, ValueError):
    pass


class BracketingError(GJMSError, ArithmeticError):
    pass


class KernelSingularity(GJMSError, ArithmeticError):
    pass


class UnsupportedGamma(GJMSError, ValueError):
    pass


class IntegerGamma(UnsupportedGamma):
    pass


class BudgetExhausted(GJMSError, RuntimeError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class UnimplementedCase(GJMSError, NotImplementedError):
    pass


class NotPolyharmonic(GJMSError, ValueError):
    pass


class JetMisalignment(GJMSError, ValueError):
    pass
