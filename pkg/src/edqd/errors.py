"""Exception types shared across the package."""


class ConfigurationError(Exception):
    """Invalid configuration value or incompatible structures (maps to CLI exit code 2)."""


class EmptyArchiveError(Exception):
    """An operation that needs at least one occupied cell was called on an empty archive."""


class DataInconsistencyError(Exception):
    """Analysis inputs contradict each other (e.g. a reference map that cannot dominate a run)."""
