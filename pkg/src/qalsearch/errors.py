"""Exception hierarchy shared by all qalsearch modules."""


class QalError(Exception):
    """Base class for every error raised by this package."""


class SizeError(QalError, ValueError):
    """A count or dimension is outside its allowed range."""


class ShapeError(QalError, ValueError):
    """Array shapes or vector dimensions disagree."""


class QubitIndexError(QalError, IndexError):
    """A qubit or site index is out of range."""


class NumericalError(QalError, ArithmeticError):
    """A computed value violates a numerical consistency check."""


class ConditioningError(NumericalError):
    """Cholesky factorization failed; carries the offending pivot."""

    def __init__(self, message, pivot_index=None, pivot_value=None):
        super().__init__(message)
        self.pivot_index = pivot_index
        self.pivot_value = pivot_value


class DomainError(QalError, ValueError):
    """Arguments lie outside the mathematical domain of an operation."""


class DegenerateGeometryError(QalError, ValueError):
    """Two atoms coincide, so a pair distance is zero."""


class MissingRecordError(QalError, KeyError):
    """A homotop id is absent from an energy table."""


class DuplicateRecordError(QalError, ValueError):
    """An energy table contains the same homotop id twice."""


class ParseError(QalError, ValueError):
    """Malformed input file; ``lineno`` is 1-based."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class OracleError(QalError, RuntimeError):
    """An external energy command failed."""

    def __init__(self, message, stderr=""):
        super().__init__(message if not stderr else f"{message}\n--- stderr ---\n{stderr}")
        self.stderr = stderr


class ConfigError(QalError, ValueError):
    """Invalid experiment configuration."""
