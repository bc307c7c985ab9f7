"""Exception hierarchy shared by every nyopsim module."""


class NyopSimError(ValueError):
    """Base class for all simulator errors."""


class InvalidCalibration(NyopSimError):
    pass


class QuantityExceedsIntercept(NyopSimError):
    """Requested quantity is at or beyond the demand curve's quantity intercept."""


class DegenerateCurves(NyopSimError):
    pass


class RoundOutOfRange(NyopSimError):
    pass


class EmptyWindow(NyopSimError):
    pass


class InsufficientData(NyopSimError):
    pass


class UnknownLink(NyopSimError):
    pass


class ConfigInvalid(NyopSimError):
    pass


class DegenerateVariance(NyopSimError):
    pass


class DegenerateMean(NyopSimError):
    pass


class InsufficientReplications(NyopSimError):
    pass
