"""
Exception hierarchy shared by every abrlab app.

The harness maps ConfigError to exit code 2 and every other AbrLabError to
exit code 1 (see harness/cli.py).
"""


class AbrLabError(Exception):
    """Base class for all errors raised by abrlab operations."""


class ConfigError(AbrLabError):
    """
    Invalid configuration.

    Args:
        message: Human readable description
        field: Dotted path of the offending field, when known
    """

    def __init__(self, message, field=None):
        self.field = field
        self.message = message
        super().__init__(f'{field}: {message}' if field else message)


class ShapeError(AbrLabError, ValueError):
    """Array or network shapes do not line up."""


class NonFiniteError(AbrLabError, ArithmeticError):
    """A loss, gradient or parameter became NaN or infinite."""


class DatasetError(AbrLabError):
    """Malformed or inconsistent dataset file or container."""

    def __init__(self, message, row=None):
        self.row = row
        super().__init__(f'row {row}: {message}' if row is not None else message)


class DivergenceError(AbrLabError):
    """Training loss exceeded the divergence guard."""


class PreconditionError(AbrLabError):
    """An oracle precondition does not hold for the given problem."""


class ConvergenceError(AbrLabError):
    """An iterative solver failed to reach its tolerance."""


class IncompleteRunError(AbrLabError):
    """One or more run directories are missing or unfinished."""

    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__('incomplete runs: ' + ', '.join(str(m) for m in self.missing))


class ActionBoundsError(AbrLabError, ValueError):
    """An action lies outside the environment's action box."""
