"""Exception hierarchy shared by every module."""


class NqeError(Exception):
    """Base class; the CLI maps subclasses to exit codes."""


class ShapeError(NqeError, ValueError):
    pass


class DomainError(NqeError, ValueError):
    pass


class NumericError(NqeError, ArithmeticError):
    pass


class FormatError(NqeError, ValueError):
    """Malformed binary input. ``offset`` is the byte position of the problem."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class SchemaError(NqeError, ValueError):
    pass


class VersionError(SchemaError):
    pass


class ConfigError(NqeError, ValueError):
    pass
