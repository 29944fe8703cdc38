"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A module was constructed or called with incompatible settings."""


class ShapeError(ValueError):
    """An input tensor violates a documented shape constraint."""


class NumericError(RuntimeError):
    """A numerical operation failed or produced non-finite values."""


class MbtFormatError(ValueError):
    """An MBT byte stream does not follow the documented format."""


class MbtTruncationError(MbtFormatError):
    """An MBT payload is shorter or longer than its header declares."""
