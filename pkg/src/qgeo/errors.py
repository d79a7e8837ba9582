"""Exception hierarchy shared by every qgeo module."""


class QGeoError(Exception):
    """Base class for all library errors."""


class DomainError(QGeoError, ValueError):
    """A point (or a finite-difference stencil) left a model's validity domain.

    ``constraint`` names the violated condition, e.g. ``"B > 0"``.
    """

    def __init__(self, message: str, constraint: str | None = None):
        super().__init__(message)
        self.constraint = constraint


class EvaluationRangeError(QGeoError, OverflowError):
    """Hyperbolic arguments too large to evaluate in double precision."""


class BifurcationBoundary(QGeoError):
    """A squared normal frequency sits on zero (within tolerance)."""

    def __init__(self, message: str, mode: int):
        super().__init__(message)
        self.mode = mode


class DegenerateMetric(QGeoError, ArithmeticError):
    """The (sub)metric is singular, so its curvature cannot be computed."""


class NoSolution(QGeoError, ValueError):
    pass


class UnsupportedModel(QGeoError, TypeError):
    pass


class ErmakovResidualError(QGeoError, ValueError):
    pass


class InvalidPath(QGeoError, ValueError):
    pass


class ConfigError(QGeoError, ValueError):
    """Raised by the scenario parser; ``path`` locates the offending field."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class DegenerateNormalization(QGeoError, ValueError):
    """All values over the normalization domain coincide."""
