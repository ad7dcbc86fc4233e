"""staticgeo: numerics for standard static spacetimes.

Geodesic integration with conservation monitoring, two-point connection by
action minimization with an independent shooting oracle, the classical
potential-system reduction, and completeness/causality diagnostics driven
by growth of the warping function.
"""

from ._backend import backend_name
from .chart import Chart, SliceCurve, euclidean_chart, polar_chart, \
    schwarzschild_radial_chart
from .spacetime import (GeodesicState, GeodesicTrajectory, StaticSpacetime,
                        Termination, aux_norm_sq, causal_character,
                        geodesic_rhs, integrate_geodesic, lambda_of,
                        line_element)

__version__ = "0.1.0"

__all__ = [
    "Chart", "SliceCurve", "GeodesicState", "GeodesicTrajectory",
    "StaticSpacetime", "Termination", "aux_norm_sq", "backend_name",
    "causal_character", "euclidean_chart", "geodesic_rhs",
    "integrate_geodesic", "lambda_of", "line_element", "polar_chart",
    "schwarzschild_radial_chart", "__version__",
]
