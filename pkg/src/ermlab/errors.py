"""Exception types shared across the package."""


class ErmlabError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(ErmlabError, ValueError):
    """Array has the wrong shape, or dimensions of two operands disagree."""


class DomainError(ErmlabError, ValueError):
    """Input violates a mathematical precondition (sign, range, definiteness)."""


class SizeError(ErmlabError, ValueError):
    """A dataset or partition is empty or too small for the operation."""


class ConvergenceError(ErmlabError, RuntimeError):
    """An iterative routine hit its iteration cap before converging."""


class DivergenceError(ErmlabError, RuntimeError):
    """Gradient descent diverged; usually the step size is too large."""


class SingularMatrixError(ErmlabError, ArithmeticError):
    """Matrix is singular (or numerically so).

    ``pivot`` is the index of the failing Cholesky pivot when known.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class SchemaError(ErmlabError, ValueError):
    """CSV file does not contain a referenced column."""


class ParseError(ErmlabError, ValueError):
    """A CSV cell could not be parsed as a number.

    Carries the 1-based data row and the column name.
    """

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class ConstantFeatureError(ErmlabError, ValueError):
    """A feature column has zero empirical variance and cannot be scaled."""


class DegenerateLabelsError(ErmlabError, ValueError):
    """Binary operation received labels from a single class only."""


class NumericError(ErmlabError, ArithmeticError):
    """A non-finite value appeared where a finite one is required."""
