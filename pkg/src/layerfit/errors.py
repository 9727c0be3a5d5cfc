"""Exception hierarchy shared by all layerfit modules."""


class LayerfitError(Exception):
    """Base class for every error raised by the package."""


class DomainError(LayerfitError, ValueError):
    """An argument lies outside the domain of an operation."""


class ParameterError(LayerfitError, ValueError):
    """Mesh family parameters are inconsistent with the problem."""


class DimensionMismatch(LayerfitError, ValueError):
    pass


class NonFiniteValue(LayerfitError, FloatingPointError):
    pass


class SingularMatrix(LayerfitError, ArithmeticError):
    """A tridiagonal pivot vanished (usually gamma < f_y)."""


class MissingExactSolution(LayerfitError):
    pass


class NoConvergence(LayerfitError):
    """Newton iteration hit ``max_iter``; ``result`` holds the best iterate."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
