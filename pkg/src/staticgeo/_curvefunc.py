"""Discrete functionals of curves on the uniform grid, with analytic gradients.

Both integrals use the composite midpoint rule on the segment midpoints:
the kinetic term pulls segment differences through the metric at midpoints,
and the reciprocal-lapse integral samples the midpoints directly.  All
gradients are exact derivatives of the discretized quantities.
"""

from __future__ import annotations

import numpy as np

from .chart import Chart
from .spacetime import StaticSpacetime


def segments_mids(nodes: np.ndarray):
    return nodes[1:] - nodes[:-1], 0.5 * (nodes[1:] + nodes[:-1])


def kinetic_and_grad(chart: Chart, nodes: np.ndarray):
    """Discrete Dirichlet energy ``(N/2) sum seg^T G(mid) seg`` and its
    gradient with respect to every node (callers slice out the interior)."""
    n_seg = nodes.shape[0] - 1
    seg, mid = segments_mids(nodes)
    G = chart.metric_many(mid)
    dG = chart.metric_jacobian_many(mid)
    Gs = np.einsum("sij,sj->si", G, seg)
    energy = 0.5 * n_seg * float(np.einsum("si,si->", seg, Gs))
    Q = np.einsum("skij,si,sj->sk", dG, seg, seg)
    grad = np.zeros_like(nodes)
    grad[:-1] += 0.5 * n_seg * (-2.0 * Gs + 0.5 * Q)
    grad[1:] += 0.5 * n_seg * (2.0 * Gs + 0.5 * Q)
    return energy, grad


def kinetic_only(chart: Chart, nodes: np.ndarray) -> float:
    n_seg = nodes.shape[0] - 1
    seg, mid = segments_mids(nodes)
    G = chart.metric_many(mid)
    return 0.5 * n_seg * float(np.einsum("si,sij,sj->", seg, G, seg))


def curve_length(chart: Chart, nodes: np.ndarray) -> float:
    seg, mid = segments_mids(nodes)
    G = chart.metric_many(mid)
    sq = np.einsum("si,sij,sj->s", seg, G, seg)
    return float(np.sum(np.sqrt(np.maximum(sq, 0.0))))


def inv_beta_integral_and_grad(st: StaticSpacetime, nodes: np.ndarray):
    """Midpoint rule for ``int_0^1 1/beta`` along the curve, with gradient."""
    n_seg = nodes.shape[0] - 1
    _, mid = segments_mids(nodes)
    b = st.beta_many(mid)
    db = st.beta_grad_many(mid)
    P = float(np.sum(1.0 / b)) / n_seg
    w = (-0.5 / n_seg) * db / (b * b)[:, None]
    grad = np.zeros_like(nodes)
    grad[:-1] += w
    grad[1:] += w
    return P, grad


def inv_beta_integral(st: StaticSpacetime, nodes: np.ndarray) -> float:
    n_seg = nodes.shape[0] - 1
    _, mid = segments_mids(nodes)
    return float(np.sum(1.0 / st.beta_many(mid))) / n_seg


def inv_beta_integral_sub_and_grad(st: StaticSpacetime, nodes: np.ndarray,
                                   m_sub: int = 64):
    """Reciprocal-lapse integral along the polyline with each segment
    refined into ``m_sub`` midpoint cells, plus its gradient.

    A coarse one-point-per-segment rule lets long segments leap over
    regions where ``1/beta`` is large, which makes the discretized
    connection functional spuriously unbounded below; sub-segment
    quadrature keeps the line integral faithful for any node placement,
    so descent on the refined objective inherits the continuum's
    coercivity.  Reported functional values keep the one-point rule.
    """
    n_seg = nodes.shape[0] - 1
    u = (np.arange(m_sub) + 0.5) / m_sub            # (M,)
    # sub-points p[s, j] = (1-u_j) x_s + u_j x_{s+1}
    pts = (nodes[:-1, None, :] * (1.0 - u)[None, :, None]
           + nodes[1:, None, :] * u[None, :, None])  # (N, M, dim)
    flat = pts.reshape(-1, nodes.shape[1])
    b = st.beta_many(flat)
    db = st.beta_grad_many(flat)
    w = 1.0 / (n_seg * m_sub)
    P = w * float(np.sum(1.0 / b))
    dP = (-w) * db / (b * b)[:, None]
    dP = dP.reshape(n_seg, m_sub, nodes.shape[1])
    grad = np.zeros_like(nodes)
    grad[:-1] += np.einsum("smk,m->sk", dP, 1.0 - u)
    grad[1:] += np.einsum("smk,m->sk", dP, u)
    return P, grad


def beta_integral(st: StaticSpacetime, nodes: np.ndarray) -> float:
    n_seg = nodes.shape[0] - 1
    _, mid = segments_mids(nodes)
    return float(np.sum(st.beta_many(mid))) / n_seg


def margin_penalty_and_grad(margin_fn, nodes: np.ndarray, weight: float,
                            fd_step: float = 1e-7, include_mids: bool = True):
    """Quadratic one-sided penalty ``w * sum relu(-margin)^2`` over the nodes
    and, when the forbidden set can slip between nodes (``include_mids``),
    the segment midpoints (midpoint violations split between the adjacent
    nodes).  Margin gradients come from central differences, taken only
    where the penalty is active."""
    def value_grad(pts):
        vals = np.array([float(margin_fn(p)) for p in pts])
        viol = np.maximum(0.0, -vals)
        pen = float(np.sum(viol**2))
        grad = np.zeros_like(pts)
        for idx in np.nonzero(viol > 0.0)[0]:
            p = pts[idx]
            g = np.empty(pts.shape[1])
            for k in range(pts.shape[1]):
                q = p.copy()
                q[k] += fd_step
                mp = float(margin_fn(q))
                q[k] -= 2.0 * fd_step
                mm = float(margin_fn(q))
                g[k] = (mp - mm) / (2.0 * fd_step)
            grad[idx] = -2.0 * viol[idx] * g
        return pen, grad

    pen_n, grad_n = value_grad(nodes.copy())
    if not include_mids:
        return weight * pen_n, weight * grad_n
    _, mid = segments_mids(nodes)
    pen_m, grad_m = value_grad(mid.copy())
    grad = grad_n.copy()
    grad[:-1] += 0.5 * grad_m
    grad[1:] += 0.5 * grad_m
    return weight * (pen_n + pen_m), weight * grad


def max_violation(margin_fn, nodes: np.ndarray, include_mids: bool = True) -> float:
    pts = nodes
    if include_mids:
        _, mid = segments_mids(nodes)
        pts = np.vstack([nodes, mid])
    worst = 0.0
    for p in pts:
        worst = max(worst, -float(margin_fn(p)))
    return worst


def min_margin(margin_fn, nodes: np.ndarray) -> float:
    return min(float(margin_fn(p)) for p in nodes)


def nodes_feasible(chart: Chart, nodes: np.ndarray) -> bool:
    """Pointwise and segment feasibility of a whole curve."""
    if chart.trivial_domain:
        return True
    for p in nodes:
        if not chart.in_domain(p):
            return False
    if chart.segment_in_domain is not None:
        for a, b in zip(nodes[:-1], nodes[1:]):
            if not chart.segment_in_domain(a, b):
                return False
    return True


def boundary_distance(chart: Chart, nodes: np.ndarray,
                      probe_eps: float) -> float:
    """Smallest node-to-boundary distance estimate.

    Uses the chart margin when available; otherwise probes a small
    coordinate ring around each node and reports ``probe_eps`` when some
    probe leaves the domain (and +inf when none does).
    """
    if chart.trivial_domain:
        return np.inf
    if chart.boundary_margin is not None:
        return min_margin(chart.boundary_margin, nodes)
    n = chart.dim
    dirs = np.vstack([np.eye(n), -np.eye(n)])
    worst = np.inf
    for p in nodes:
        for d in dirs:
            if not chart.in_domain(p + probe_eps * d):
                worst = min(worst, probe_eps)
    return worst
