"""Exception types raised across the package."""


class SdftError(Exception):
    """Base class for all errors raised by sdftfreq."""


class LengthMismatchError(SdftError, ValueError):
    """A window does not have the length the filter bank expects."""


class NotWarmedUpError(SdftError, RuntimeError):
    """A spectrum was used before the sliding window filled up."""


class DegenerateSpectrumError(SdftError, ArithmeticError):
    """The three-bin difference ratio has a (numerically) zero denominator."""


class ConfigMismatchError(SdftError, ValueError):
    """Estimator parameters do not match the spectrum they are applied to."""


class InvalidSpecError(SdftError, ValueError):
    """A signal or experiment description violates its invariants."""


class ConfigError(SdftError, ValueError):
    """An experiment config file could not be parsed."""

    def __init__(self, message, keys=()):
        super().__init__(message)
        self.keys = tuple(keys)
