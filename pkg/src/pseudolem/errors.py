"""Exception hierarchy shared by all modules."""


class PseudolemError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(PseudolemError, ValueError):
    pass


# -- expressions ------------------------------------------------------------

class ExprSyntaxError(PseudolemError, ValueError):
    """Malformed expression text. ``position`` is a 0-based character offset."""

    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnsupportedOperation(PseudolemError, ValueError):
    pass


class DomainError(PseudolemError, ArithmeticError):
    pass


# -- geometry ---------------------------------------------------------------

class GeometryError(PseudolemError, ValueError):
    pass


class TooCloseToCurve(PseudolemError):
    pass


# -- counting ---------------------------------------------------------------

class TooCloseToImage(PseudolemError):
    pass


class PoleOnCurve(PseudolemError):
    pass


class InternalInconsistency(PseudolemError):
    pass


# -- locator ----------------------------------------------------------------

class UnresolvedCluster(PseudolemError):
    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class BoundaryHit(PseudolemError):
    pass


# -- trace ------------------------------------------------------------------

class StepCollapse(PseudolemError):
    pass


# -- blaschke ---------------------------------------------------------------

class InvalidZero(PseudolemError, ValueError):
    pass


class InvalidConstant(PseudolemError, ValueError):
    pass


class NotBoundaryUnimodular(PseudolemError):
    pass
