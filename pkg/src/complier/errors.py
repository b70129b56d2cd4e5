"""Exception hierarchy shared by the whole package."""


class ComplierError(Exception):
    """Base class for every error raised by this package."""


# data validation
class DataError(ComplierError, ValueError):
    pass


class NonBinaryValue(DataError):
    pass


class EmptyArm(DataError):
    pass


class LengthMismatch(DataError):
    pass


class NonFiniteInput(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class MissingColumn(DataError):
    pass


# population-level estimands
class NoCompliers(ComplierError):
    pass


class ZeroDenominator(ComplierError):
    pass


# randomization
class InvalidArmSize(ComplierError, ValueError):
    pass


class TooManyAssignments(ComplierError):
    pass


# working models
class EstimationError(ComplierError):
    """Raised when an estimator cannot produce a value for a sample."""


class DegenerateDesign(EstimationError):
    pass


class SeparationDetected(EstimationError):
    pass


class SingularHessian(EstimationError):
    pass


class NoConvergence(EstimationError):
    pass


class WeakDenominator(EstimationError):
    pass


class InsufficientArmSize(EstimationError):
    pass


class DegenerateCalibration(EstimationError):
    pass


class NonPositiveDf(EstimationError):
    pass


# simulation / configuration
class InvalidCovariance(ComplierError, ValueError):
    pass


class ConfigError(ComplierError):
    def __init__(self, key, message=None):
        super().__init__(message or f"invalid value for config key {key!r}")
        self.key = key
