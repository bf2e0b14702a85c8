"""Exception hierarchy shared by every pipeline stage."""


class WsiError(Exception):
    """Base class for all errors raised by subwsi."""


class ConfigError(WsiError, ValueError):
    pass


class DomainError(WsiError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ParseError(WsiError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(ParseError):
    pass


class IngestError(ParseError):
    pass


class NoSubstitutesError(WsiError):
    """Raised when an occurrence ends up with nothing to cluster on."""
