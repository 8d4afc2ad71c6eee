"""Exception types shared across the package."""


class ProtolabelError(Exception):
    """Base class for all package-specific errors."""


class IngestionError(ProtolabelError):
    """A dataset file is missing or unreadable."""


class DataFormatError(ProtolabelError):
    """A dataset file exists but its contents are malformed."""


class LabelError(ProtolabelError):
    """A label value is outside the declared class range."""


class NumericError(ProtolabelError):
    """A non-finite value appeared where finite arithmetic is required."""


class ColdPoolError(ProtolabelError):
    """Classification was requested before any prototype exists."""


class BudgetExhaustedError(ProtolabelError):
    """The labeling session has spent its full query budget."""


class ConfigError(ProtolabelError):
    """A configuration value is missing, malformed, or inconsistent."""
