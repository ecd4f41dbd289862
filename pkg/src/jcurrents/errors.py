"""Exception hierarchy shared by all modules."""


class JCurrentsError(Exception):
    pass


class NotAlmostComplex(JCurrentsError):
    pass


class DegenerateEigenspace(JCurrentsError):
    pass


class MixedDegree(JCurrentsError):
    pass


class MixedBidegree(MixedDegree):
    pass


class WrongBidegree(JCurrentsError):
    pass


class BidegreeMismatch(JCurrentsError):
    pass


class DimensionMismatch(JCurrentsError):
    pass


class NegativeWeight(JCurrentsError):
    pass


class DomainViolation(JCurrentsError):
    pass


class DifferentiationFailure(JCurrentsError):
    pass


class NonConvergence(JCurrentsError):
    """Quadrature ran out of depth; ``result`` holds the partial estimate."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ExtrapolationUnstable(JCurrentsError):
    def __init__(self, message, estimates=None):
        super().__init__(message)
        self.estimates = estimates


class UnsupportedCurrent(JCurrentsError):
    pass


class IntegrandBlowup(JCurrentsError):
    pass


class MonotoneFitFailure(JCurrentsError):
    pass


class ValidationRequired(JCurrentsError):
    pass


class ConfigError(JCurrentsError):
    pass
