class EllipticError(ValueError):
    """Base class for every error raised by the verification library"""


class ThetaDomainError(EllipticError):
    pass


class ThetaOverflowError(EllipticError):
    pass


class DegenerateParameterError(EllipticError):
    """A denominator theta factor vanished (parameters are not generic)"""


class ConstraintViolationError(EllipticError):
    pass


class SamplingExhaustedError(EllipticError):
    pass


class UsageError(EllipticError):
    pass
