"""Exception hierarchy. The CLI maps these onto exit codes."""


class BellwetherError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(BellwetherError, ValueError):
    """Invalid parameter or configuration value."""


class DataError(BellwetherError, ValueError):
    """Input data cannot support the requested operation."""


class SchemaError(DataError):
    """A required column is missing from the input."""


class EmptyInputError(DataError):
    """The input holds no data rows."""


class TransformError(DataError):
    """A feature transform is undefined for the given values."""


class InsufficientDataError(DataError):
    """Too few observations for the computation."""


class RankDeficientError(DataError):
    """The regression design matrix does not have full column rank."""

    def __init__(self, message, dependent_columns=()):
        super().__init__(message)
        self.dependent_columns = list(dependent_columns)


class DegenerateError(DataError):
    """A statistic is undefined (zero variance and similar)."""


class DivergenceError(BellwetherError, ArithmeticError):
    """Training produced a non-finite loss."""


class NoBellwetherError(BellwetherError):
    """No ergodic candidate window was found within the search budget."""
