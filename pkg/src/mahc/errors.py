"""Exception hierarchy shared across the package."""


class MahcError(Exception):
    """Base class for all errors raised by this package."""


class DataFormatError(MahcError, ValueError):
    """Malformed input file (ragged rows, bad tokens, unreadable sections)."""


class SchemaError(MahcError, ValueError):
    """Header or naming problem, e.g. duplicate variable names."""


class DegenerateColumnError(MahcError, ValueError):
    """A variable with fewer than two states, or a dataset with no variables."""


class CycleError(MahcError, ValueError):
    """A graph edit or input graph would contain a directed cycle."""


class ConfigurationError(MahcError, ValueError):
    """Unknown algorithm token or inconsistent search settings."""
