class FgiqaError(ValueError):
    """Base class for metric errors."""


class InvalidInputError(FgiqaError):
    """Raised for malformed images, planes, or score lists."""


class InvalidConfigError(FgiqaError):
    """Raised when a configuration value is out of its allowed range."""
