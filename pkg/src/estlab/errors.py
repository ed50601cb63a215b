"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so raising the right class
matters more than the message wording.
"""


class EstlabError(Exception):
    """Base class for package errors."""


class DimensionError(EstlabError, ValueError):
    """Tensor shapes are incompatible with the requested operation."""


class ConfigError(EstlabError, ValueError):
    """A configuration value is missing, unknown, or out of range."""


class DataError(EstlabError, RuntimeError):
    """A dataset file is missing, corrupt, or inconsistent."""
