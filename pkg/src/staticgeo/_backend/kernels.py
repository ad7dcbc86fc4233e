"""Kernel descriptors for the compiled integrator core.

A chart or warping function that matches one of the parameterized families
below can be handed to the compiled backend as a small (kind, params) code
instead of a Python callable.  Geometries without a descriptor always run
on the pure-Python backend.
"""

from __future__ import annotations

from dataclasses import dataclass

# metric families
METRIC_FLAT = 0          # identity metric, any dimension
METRIC_SCHW_EQ = 1       # (r, phi): diag(1/(1 - 2m/r), r^2); params = (m,)
METRIC_CONF_SEC2 = 2     # 1-d: sec^2(x) dx^2

# warping-function families
BETA_CONST = 0           # params = (c,)
BETA_POWQ = 1            # (1 + |x|^2)^p; params = (p,)
BETA_SCHW = 2            # 1 - 2m/r with r = x[0]; params = (m,)
BETA_SEC2 = 3            # 1/cos^2(x)

# domain families
DOM_ALL = 0
DOM_BALL = 1             # |x| < R; params = (R,)
DOM_COORD0_GT = 2        # x[0] > a; params = (a,)
DOM_ABS0_LT = 3          # |x[0]| < a; params = (a,)
DOM_SLIT = 4             # R^2 minus the ray {x = a, y <= b}; params = (a, b)


@dataclass(frozen=True)
class MetricKernel:
    kind: int
    params: tuple = ()


@dataclass(frozen=True)
class BetaKernel:
    kind: int
    params: tuple = ()


@dataclass(frozen=True)
class DomainKernel:
    kind: int
    params: tuple = ()
