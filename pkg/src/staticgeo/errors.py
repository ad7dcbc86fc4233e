"""Exception types shared across the package."""


class StaticGeoError(Exception):
    """Base class for all package-specific errors."""


class OutOfDomainError(StaticGeoError):
    """A point left the chart's coordinate domain."""

    def __init__(self, point, label=""):
        self.point = tuple(float(v) for v in point)
        where = f" on chart '{label}'" if label else ""
        super().__init__(f"point {self.point} is outside the domain{where}")


class DegenerateMetricError(StaticGeoError):
    """Metric evaluation produced a non-invertible or non-positive matrix."""


class StiffnessError(StaticGeoError):
    """Adaptive step size underflowed away from the domain boundary.

    Carries the partial trajectory integrated so far in ``trajectory``.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class NotReducibleError(StaticGeoError):
    """Geodesic is orthogonal to the time direction (time constant of
    motion vanishes), so no classical reduction exists."""


class NearTurningPointError(StaticGeoError):
    """Conformal-rescaling check not applicable: the energy margin drops
    below the configured floor somewhere along the curve."""


class SeedFailureError(StaticGeoError):
    """No seed curve could be placed inside the chart domain."""


class UnreachableError(StaticGeoError):
    """Endpoints appear to lie in different connected components."""


class ConfigError(StaticGeoError):
    """Experiment configuration failed validation."""
