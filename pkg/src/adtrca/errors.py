"""Exception hierarchy shared across the package."""


class SsvepError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(SsvepError, ValueError):
    pass


class OutOfRangeError(InvalidInputError):
    pass


class ChannelLookupError(SsvepError, LookupError):
    def __init__(self, missing, available):
        self.missing = list(missing)
        self.available = list(available)
        super().__init__(
            f"unknown channel(s) {self.missing}; available: {self.available}"
        )

    def __str__(self):
        return self.args[0]


class AliasingError(InvalidInputError):
    pass


class DecompositionError(SsvepError, ArithmeticError):
    pass


class DegenerateDenominatorError(DecompositionError):
    pass


class UndefinedCorrelationError(SsvepError, ArithmeticError):
    pass


class InsufficientDataError(SsvepError, ValueError):
    pass


class NumericalFailureError(SsvepError, ArithmeticError):
    pass


class InvalidDatasetError(SsvepError, ValueError):
    pass


class ConfigurationError(SsvepError, ValueError):
    pass


class CorruptFileError(SsvepError, OSError):
    pass


class VersionError(SsvepError, ValueError):
    pass
