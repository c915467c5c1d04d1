class HelixLinkError(Exception):
    """Base class for all simulator errors."""


class ConfigurationError(HelixLinkError):
    pass


class DegenerateGeometryError(HelixLinkError):
    """Raised when transmitter and receiver positions coincide."""


class FittingError(HelixLinkError):
    pass


class AggregationError(HelixLinkError):
    pass


class DomainError(HelixLinkError, ValueError):
    """Argument outside the domain of a profile or model."""


class ConfigSyntaxError(ConfigurationError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownKeyError(ConfigurationError):
    def __init__(self, key, line=None):
        self.key = key
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"unknown key '{key}'{where}")


class InvalidValueError(ConfigurationError):
    def __init__(self, key, value, reason, line=None):
        self.key = key
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"invalid value {value!r} for '{key}'{where}: {reason}")


class MissingCalibrationError(ConfigurationError):
    pass
