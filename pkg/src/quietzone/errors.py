"""Exception types shared across the package."""


class QuietzoneError(Exception):
    pass


class DomainError(QuietzoneError, ValueError):
    """Argument outside the domain where a quantity is defined."""


class SingularityError(QuietzoneError, ValueError):
    """Field evaluated at one of its source points."""


class ContractError(QuietzoneError, ValueError):
    """Inputs with mismatched shapes or violated preconditions."""


class NumericalFailure(QuietzoneError, RuntimeError):
    pass


class SynthesisFailure(QuietzoneError, RuntimeError):
    def __init__(self, message, omega=None):
        super().__init__(message)
        self.omega = omega


class DegenerateMetric(QuietzoneError, ZeroDivisionError):
    """A ratio metric whose denominator vanishes."""


class EstimationFailure(QuietzoneError, RuntimeError):
    pass
