"""Exception types shared across the pipeline.

Exit-code mapping used by the CLI: SchemaError/ConfigError/DataError are
usage or input problems (exit 2), DegenerateDataError and its subclasses
are data-degeneracy problems (exit 3).
"""


class EduvulnError(Exception):
    """Base class for all package errors."""


class SchemaError(EduvulnError):
    """A CSV stream does not match its documented header."""


class ConfigError(EduvulnError):
    """Invalid configuration values (bad k, overlapping year splits, ...)."""


class DataError(EduvulnError):
    """Input data cannot be processed (missing census population, unknown code, ...)."""


class DegenerateDataError(EduvulnError):
    """Data is structurally unusable for fitting (one-class labels, ...)."""


class CollinearityError(DegenerateDataError):
    """Design matrix is rank deficient; collinear features."""
