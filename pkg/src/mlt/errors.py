"""Exception hierarchy shared by the numerical modules."""


class MltError(Exception):
    """Base class for numerical failures raised by this package."""


class MatrixOverflowError(MltError, OverflowError):
    """A matrix exponential produced non-finite entries."""


class SingularBasisError(MltError, ValueError):
    """A Jordan basis could not be inverted to working precision."""


class DomainError(MltError, ValueError):
    """A transform was evaluated at (or too near) one of its poles."""


class NonconvergentTransformError(MltError, ValueError):
    """The matrix Laplace transform does not exist at the requested argument."""


class UnsupportedCombinationError(MltError, NotImplementedError):
    """The requested fading law / matrix argument pairing has no supported route."""


class QuadratureError(MltError, RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DivergentIntegralError(MltError, ArithmeticError):
    """A Campbell-type integral diverges.

    ``entry`` is the zero-based index of the first row entry whose
    integrand is not integrable.
    """

    def __init__(self, message, entry=0, where=None):
        super().__init__(message)
        self.entry = entry
        self.where = where


class InfiniteMomentError(MltError, ArithmeticError):
    """A shot-noise moment is infinite; ``order`` is the first divergent one."""

    def __init__(self, message, order):
        super().__init__(message)
        self.order = order
