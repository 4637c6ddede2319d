"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes, so modules should raise the most
specific class that applies.
"""


class PixieFdsError(Exception):
    """Base class for all package errors."""


class ConfigError(PixieFdsError):
    """Invalid configuration or invalid combination of options."""


class DataError(PixieFdsError):
    """Malformed, truncated or otherwise unusable input data."""


class FormatError(DataError):
    """A binary or text container does not conform to its format."""


class NumericalError(PixieFdsError):
    """A numerical failure: singular matrix, non-finite loss, etc."""
