"""Exception hierarchy shared by all modules."""


class EnsembleCtlError(Exception):
    """Base class for every error raised by this package."""


class DivisionByZeroPolynomial(EnsembleCtlError, ZeroDivisionError):
    pass


class NotSquare(EnsembleCtlError, ValueError):
    pass


class DimensionMismatch(EnsembleCtlError, ValueError):
    pass


class NotMonic(EnsembleCtlError, ValueError):
    pass


class DegreeZero(EnsembleCtlError, ValueError):
    pass


class NotControllable(EnsembleCtlError):
    """The Kalman rank test failed for a pair (A, B)."""


class SearchExhausted(EnsembleCtlError):
    """No cyclic generator was found within the configured height cap."""


class MalformedShape(EnsembleCtlError, ValueError):
    pass


class NonTriangular(EnsembleCtlError, ValueError):
    pass


class EmptyInterval(EnsembleCtlError, ValueError):
    pass


class ConstantEigenfunction(EnsembleCtlError, ValueError):
    pass


class OutOfRange(EnsembleCtlError, ValueError):
    pass


class NotSingleInput(EnsembleCtlError, ValueError):
    pass


class PointwiseUncontrollable(EnsembleCtlError):
    """det P(beta) vanishes somewhere in K; ``witness`` holds the root."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotControllableAtEta(EnsembleCtlError):
    pass


class ShapeMismatch(EnsembleCtlError, ValueError):
    pass


class ParseError(EnsembleCtlError, ValueError):
    pass


class MalformedSystem(EnsembleCtlError, ValueError):
    pass


class InexactPoint(EnsembleCtlError, ValueError):
    """An exact construction was requested at a point with irrational data."""
