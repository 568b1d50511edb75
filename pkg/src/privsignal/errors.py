"""Exception types raised across the package."""


class PrivSignalError(Exception):
    """Base class for all package errors."""


class RangeExceeded(PrivSignalError, ValueError):
    """A real value lies outside the codec's encodable range."""


class TooFewParties(PrivSignalError, ValueError):
    """An operation needs at least two participants."""


class EmptyInput(PrivSignalError, ValueError):
    pass


class InvalidRisk(PrivSignalError, ValueError):
    """Identification risk outside (0, 1/8)."""


class NonPositiveBudget(PrivSignalError, ValueError):
    """The privacy budget implied by the risk level is not positive."""


class NonPositiveInput(PrivSignalError, ValueError):
    pass


class InvalidIndicator(PrivSignalError, ValueError):
    """A stream indicator vector does not contain exactly one 1."""


class FullCoalition(PrivSignalError, ValueError):
    """The coalition contains every party, so nothing is left to protect."""


class DimensionMismatch(PrivSignalError, ValueError):
    pass


class MalformedInstance(PrivSignalError, ValueError):
    """A linear program with inconsistent dimensions or bounds."""


class InvalidConfig(PrivSignalError, ValueError):
    pass


class NotOptimal(PrivSignalError, RuntimeError):
    """A timing plan was requested from a non-optimal LP solution."""


class ConfigError(PrivSignalError, ValueError):
    pass


class UnknownAxis(PrivSignalError, KeyError):
    def __str__(self) -> str:
        return f"unknown config path: {self.args[0] if self.args else ''}"
