"""Exception types shared across the package."""


class FrameBridgeError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(FrameBridgeError, ValueError):
    """A scalar parameter violates its documented precondition."""


class ShapeMismatchError(FrameBridgeError, ValueError):
    """Array operands do not have compatible shapes."""


class ConfigError(FrameBridgeError):
    """Invalid experiment configuration. Carries the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class NumericalError(FrameBridgeError):
    """A numerical operation failed (singular solve, invalid radicand, ...)."""
