"""Exception hierarchy shared by every vwb module."""


class VWBError(Exception):
    """Base class for all errors raised by vwb."""


# linear algebra
class NonSquare(VWBError, ValueError):
    pass


class NotSymmetric(VWBError, ValueError):
    pass


class NotPSD(VWBError, ValueError):
    pass


class NotPD(VWBError, ValueError):
    pass


class NoConvergence(VWBError, RuntimeError):
    pass


# shapes and layouts
class LayoutMismatch(VWBError, ValueError):
    pass


class DimMismatch(VWBError, ValueError):
    pass


class BatchMismatch(VWBError, ValueError):
    pass


class WeightMismatch(VWBError, ValueError):
    pass


class ShapeMismatch(VWBError, ValueError):
    pass


class TooLarge(VWBError, ValueError):
    pass


class TooFewSamples(VWBError, ValueError):
    pass


class DegenerateTruth(VWBError, ValueError):
    pass


# training
class NonFiniteLoss(VWBError, FloatingPointError):
    """Raised when the objective or a gradient stops being finite.

    ``term`` names the offending quantity (e.g. ``"r1"``, ``"r2"``,
    ``"potential"``, ``"lambda"``) so callers can tell an entropy overflow
    from a diverging network.
    """

    def __init__(self, message, term=None, iteration=None):
        super().__init__(message)
        self.term = term
        self.iteration = iteration


# files and configuration
class FileParse(VWBError, ValueError):
    pass


class DimensionMismatch(VWBError, ValueError):
    pass


class ConfigError(VWBError, ValueError):
    pass


class ConfigSyntax(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


class MissingRequired(ConfigError):
    pass
