"""Exception hierarchy shared by all modules."""


class MVGammaError(ValueError):
    """Base class for invalid input to the library."""


class NotPositiveDefiniteError(MVGammaError):
    """A matrix failed the triangular square-root factorization."""


class ShapeParameterError(MVGammaError):
    """The shape parameter violates the precondition of an operation.

    The message names the violated inequality, e.g. ``requires 2α > p₂−1``.
    """


class SeriesConvergenceError(ArithmeticError):
    """The non-central gamma series hit its hard term cap."""


class QuadratureError(ArithmeticError):
    """An adaptive quadrature did not reach its requested tolerance."""
