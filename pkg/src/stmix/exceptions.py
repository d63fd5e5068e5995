"""Exception types shared across the package."""


class StmixError(Exception):
    """Base class for package-specific errors."""


class DataValidationError(StmixError):
    """Malformed or inconsistent input data (CSV schema, draw files, masks)."""


class NumericalError(StmixError):
    """A numerical operation failed beyond recovery (factorization, rank).

    Carries optional diagnostics in ``info`` (condition estimates, offending
    columns, jitter levels tried).
    """

    def __init__(self, message, info=None):
        super().__init__(message)
        self.info = dict(info) if info else {}


class ConfigError(StmixError):
    """Bad configuration file: unknown key, unparseable value, bad section."""
