"""The two-point connection functional and its discrete calculus.

A curve ``x(s)`` on [0, 1] between fixed endpoints, together with a time
gap ``delta_t``, is graded by

    J(x) = 1/2 int g_S(x', x') ds  -  delta_t^2 / (2 int 1/beta(x) ds),

whose critical points are exactly the spatial parts of connecting
geodesics.  The time component is recovered afterwards from the first
integral ``beta t' = lambda`` with ``lambda = delta_t / int 1/beta``; by
Cauchy-Schwarz, J is bounded below by the Lagrangian-type action
``1/2 int g_S(x',x') - (delta_t^2/2) int beta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _curvefunc as cf
from .chart import SliceCurve
from .spacetime import StaticSpacetime


@dataclass(frozen=True)
class ActionEvaluation:
    J: float
    kinetic: float
    inv_beta_integral: float
    delta_t: float


def action_J(st: StaticSpacetime, curve: SliceCurve, delta_t: float
             ) -> ActionEvaluation:
    """Evaluate the connection functional on a discrete curve."""
    curve.require_in_domain(st.chart)
    nodes = curve.nodes
    kinetic = cf.kinetic_only(st.chart, nodes)
    P = cf.inv_beta_integral(st, nodes)
    J = kinetic - delta_t * delta_t / (2.0 * P)
    return ActionEvaluation(J=J, kinetic=kinetic, inv_beta_integral=P,
                            delta_t=float(delta_t))


def action_value_grad(st: StaticSpacetime, nodes: np.ndarray, delta_t: float,
                      quad_sub: int = 1):
    """J and its full per-node gradient (endpoints included; fixed-endpoint
    solvers slice the interior).

    ``quad_sub > 1`` refines the reciprocal-lapse quadrature to ``quad_sub``
    midpoint cells per segment; descent objectives use this to stay
    faithful on under-resolved node placements (see the curve-functional
    module), while reported evaluations keep one cell per segment.
    """
    kinetic, kgrad = cf.kinetic_and_grad(st.chart, nodes)
    if quad_sub > 1:
        P, pgrad = cf.inv_beta_integral_sub_and_grad(st, nodes, quad_sub)
    else:
        P, pgrad = cf.inv_beta_integral_and_grad(st, nodes)
    dt2 = delta_t * delta_t
    J = kinetic - dt2 / (2.0 * P)
    grad = kgrad + (dt2 / (2.0 * P * P)) * pgrad
    return J, grad


def grad_action_J(st: StaticSpacetime, curve: SliceCurve, delta_t: float
                  ) -> np.ndarray:
    """Analytic gradient of the discretized J at the interior nodes.

    Includes the metric-derivative terms of the kinetic part and the
    ``(int 1/beta)^-2`` chain term of the time part.
    """
    curve.require_in_domain(st.chart)
    _, grad = action_value_grad(st, curve.nodes, delta_t)
    return grad[1:-1]


def reconstruct_time(st: StaticSpacetime, curve: SliceCurve, delta_t: float,
                     t0: float = 0.0):
    """Recover the time samples and the time constant over a spatial curve.

    From ``beta t' = lambda`` and ``t(1) - t(0) = delta_t``:
    ``lambda = delta_t / int_0^1 1/beta`` and ``t(s) = t0 + lambda
    int_0^s 1/beta``, evaluated by cumulative midpoint quadrature on the
    curve's grid.  Returns ``(t_samples, lambda)``.
    """
    curve.require_in_domain(st.chart)
    nodes = curve.nodes
    n_seg = curve.n_segments
    _, mid = cf.segments_mids(nodes)
    u = 1.0 / st.beta_many(mid)
    P = float(np.sum(u)) / n_seg
    lam = delta_t / P
    t = np.empty(n_seg + 1)
    t[0] = t0
    np.cumsum(u / n_seg, out=t[1:])
    t[1:] = t0 + lam * t[1:]
    return t, float(lam)


def lower_bound_gap(st: StaticSpacetime, curve: SliceCurve, delta_t: float
                    ) -> float:
    """Slack of J above its Lagrangian-type lower bound (see module doc).

    Nonnegative up to quadrature roundoff; zero exactly when the lapse is
    constant along the curve or when ``delta_t = 0``.
    """
    curve.require_in_domain(st.chart)
    nodes = curve.nodes
    ev = action_J(st, curve, delta_t)
    bound = ev.kinetic - 0.5 * delta_t * delta_t * cf.beta_integral(st, nodes)
    return ev.J - bound
