"""Exception types raised across the package."""


class TodaFillError(Exception):
    """Base class for all package errors."""


class ZeroK(TodaFillError):
    pass


class KIsMinusCubeRoot96(TodaFillError):
    """k^3 = -1/96 makes the period denominator 96k^3 + 1 vanish."""


class SpecialKDegreeMismatch(TodaFillError):
    """k^3 = 1/48 only allows deg = -chi."""


class InconsistentTuple(TodaFillError):
    pass


class NonAdmissible(TodaFillError):
    pass


class NotNutAdmissible(NonAdmissible):
    pass


class OutOfRange(TodaFillError):
    pass


class NutDegenerate(TodaFillError):
    """The profile closes off at a point, not a bolt surface."""


class NonFiniteInput(TodaFillError):
    pass


class ShapeMismatch(TodaFillError):
    pass


class NormalizationFailed(TodaFillError):
    pass


class NewtonDiverged(TodaFillError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class NonPositiveW(TodaFillError):
    pass


class MeanMismatch(TodaFillError):
    pass


class PatchTooCloseToBoundary(TodaFillError):
    pass


class InfiniteK(TodaFillError):
    pass


class ConfigError(TodaFillError):
    pass
