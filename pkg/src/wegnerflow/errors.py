"""Exception hierarchy shared by every module."""


class FlowError(Exception):
    """Base class for all errors raised by wegnerflow."""


class HermiticityViolation(FlowError):
    pass


class NonFinite(FlowError):
    pass


class DimensionUnsupported(FlowError):
    pass


class Overflow(FlowError):
    pass


class NonPositiveCoefficient(FlowError):
    pass


class ComplexRoots(FlowError):
    pass


class NoConvergence(FlowError):
    pass


class VanishingComponent(FlowError):
    pass


class StepTooLarge(FlowError):
    pass


class NegativeRadicand(FlowError):
    pass


class QuadratureFailure(FlowError):
    pass


class DegenerateExponents(FlowError):
    pass


class NotTridiagonal(FlowError):
    pass


class FFViolation(FlowError):
    pass


class NotRealSymmetric(FlowError):
    pass


class TooSparse(FlowError):
    pass


class UnsupportedExactCase(FlowError):
    pass


class RoundTripFailure(FlowError):
    """A calibrated solution does not reproduce its initial matrix at s = 0."""
