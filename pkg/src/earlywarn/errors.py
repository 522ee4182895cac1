"""Exception hierarchy shared across the package.

The three subclasses map onto the CLI exit codes (config=2, data=3,
numerical=4) so scripts can dispatch on the failure class.
"""


class EarlywarnError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(EarlywarnError):
    """Invalid manifest, scenario spec, or parameter combination."""

    exit_code = 2


class DataError(EarlywarnError):
    """Malformed, misaligned, or degenerate input data."""

    exit_code = 3


class NumericalError(EarlywarnError):
    """A numerical procedure failed to meet its accuracy contract."""

    exit_code = 4
