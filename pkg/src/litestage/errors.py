"""Exception types shared across the toolkit."""


class LitestageError(Exception):
    """Base class for all toolkit errors."""


class GeometryError(LitestageError):
    """Invalid stage geometry (bounds, manufacturability, containment)."""


class MeshError(LitestageError):
    """Mesh generation failure (under-resolution, degenerate elements)."""


class ConfigError(LitestageError):
    """Malformed or inconsistent pipeline configuration."""


class DecouplingError(LitestageError):
    """Actuator/sensor layout cannot decouple the requested DOFs."""


class InfeasibleError(LitestageError):
    """Constrained optimization found no feasible point.

    Carries the best iterate seen and its constraint violations so callers
    can report what blocked the design.
    """

    def __init__(self, message, best_point=None, violations=None):
        super().__init__(message)
        self.best_point = best_point
        self.violations = violations


class SolverError(LitestageError):
    """Numerical failure (eigensolver breakdown, singular system)."""
