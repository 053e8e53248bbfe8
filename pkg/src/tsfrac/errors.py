"""Exception hierarchy shared by every module."""


class TsfracError(Exception):
    """Base class for all package errors."""


class InvalidTimeScale(TsfracError, ValueError):
    pass


class PointNotInTimeScale(TsfracError, ValueError):
    pass


class EmptyRestriction(TsfracError, ValueError):
    pass


class InvalidStep(TsfracError, ValueError):
    pass


class NodeNotInMesh(TsfracError, ValueError):
    pass


class DimensionMismatch(TsfracError, ValueError):
    pass


class MeshMismatch(TsfracError, ValueError):
    pass


class AlphaOutOfRange(TsfracError, ValueError):
    pass


class HypothesisViolated(TsfracError, ValueError):
    pass


class DivergentBoundaryValue(TsfracError, ArithmeticError):
    pass


class NonFiniteValue(TsfracError, ArithmeticError):
    pass


class MissingCertificate(TsfracError, ValueError):
    pass


class GeometryNotFound(TsfracError, RuntimeError):
    pass


class MaxIterations(TsfracError, RuntimeError):
    """Raised when an iterative solver runs out of budget.

    ``result`` carries the best iterate found so far.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
