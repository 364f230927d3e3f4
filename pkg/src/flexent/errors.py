"""Exception hierarchy shared by the library and the CLI."""


class FlexentError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it."""

    exit_code = 1


class ValidationError(FlexentError, ValueError):
    exit_code = 2


class DimensionError(ValidationError):
    pass


class SchemaError(ValidationError):
    """A file row or column failed to parse against its schema."""

    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class UsageError(ValidationError):
    pass


class InfeasiblePlanError(FlexentError):
    exit_code = 3


class ConvergenceError(FlexentError):
    """Numerical search did not converge; ``best_value`` holds the best result found."""

    exit_code = 4

    def __init__(self, message, best_value=None):
        super().__init__(message)
        self.best_value = best_value
