"""Exception hierarchy shared across the simulator."""


class OamSimError(Exception):
    """Base class for all simulator errors."""


class DomainError(OamSimError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class TruncationError(DomainError):
    """Amplitude left the truncated OAM window during propagation."""


class FitError(OamSimError, ValueError):
    pass


class CalibrationError(OamSimError, RuntimeError):
    """A calibration target could not be bracketed by the search range."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class ConfigError(OamSimError, ValueError):
    """Invalid experiment configuration.

    ``line`` is the 1-based line number in the config file when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
