"""Exception hierarchy shared by every latentwsd module."""


class LatentWsdError(Exception):
    """Base class for all errors raised by this package."""


class NonNegativityViolation(LatentWsdError, ValueError):
    """A matrix entry was negative or not finite."""


class ShapeError(LatentWsdError, ValueError):
    """Operand shapes are not conformable."""


class ConfigError(LatentWsdError, ValueError):
    """Invalid configuration or input that cannot be processed as requested."""


class ParseError(LatentWsdError, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
