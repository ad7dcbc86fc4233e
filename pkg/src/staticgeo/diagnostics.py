"""Numerical classifiers for completeness and causality hypotheses.

Three instruments:

* a growth classifier fitting the radial exponent of the warping function
  (or its reciprocal) along unit-speed slice rays, with bands around the
  critical quadratic rate;
* completeness probes that integrate random unit-speed geodesics of the
  physical metric, the auxiliary Riemannian metric (time-time sign
  flipped), or the conformally rescaled slice metric ``g_S / beta``, and
  look for runs that leave the domain or blow up at finite parameter.  A
  probe is a semi-decision: a witness is evidence of incompleteness, "no
  witness" is only evidence, never proof, so reports carry the sample
  count and horizon;
* an arrival-time analysis: the earliest time a point of the slice can be
  reached causally from an event equals the conformal slice distance, and
  attainment of that infimum detects whether the causal future is closed
  near its boundary.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .chart import Chart, SliceCurve
from .distance import DistanceOpts, DistanceResult, slice_distance
from .errors import StiffnessError
from .interp import hermite_eval
from .spacetime import (GeodesicState, StaticSpacetime, integrate_geodesic,
                        integrate_slice_geodesic)

SUBQUADRATIC = "subquadratic"
QUADRATIC = "quadratic"
SUPERQUADRATIC = "superquadratic"

METRIC_G = "g"
METRIC_G_R = "g_R"
METRIC_G_S_STAR = "g_S_star"

DEFAULT_BANDS = (1.9, 2.1)


@dataclass(frozen=True)
class GrowthReport:
    exponent: float
    classification: str
    fit_residual: float
    base_point: tuple
    radii: tuple
    amplitude: float
    which: str
    truncated_rays: int
    samples: tuple          # (radius, max f) pairs actually used


@dataclass(frozen=True)
class ProbeWitness:
    sample_index: int
    termination: str
    s_exit: float
    trajectory: object


@dataclass(frozen=True)
class ProbeReport:
    verdict: str            # witness_found | no_witness
    witness: Optional[ProbeWitness]
    n_samples: int
    s_max: float
    metric_probed: str
    n_left_domain: int
    n_blow_up: int
    n_inconclusive: int     # runs lost to step-size underflow


@dataclass(frozen=True)
class ArrivalResult:
    infimum_t: float
    attained: bool
    curve: Optional[SliceCurve]


# ---------------------------------------------------------------------------
# growth classifier


def _ray_directions(chart: Chart, base, n_rays: int):
    G = chart.metric_at(base)
    L = np.linalg.cholesky(G)
    if chart.dim == 1:
        units = [np.array([1.0]), np.array([-1.0])]
    else:
        if chart.dim == 2:
            angles = np.linspace(0.0, 2.0 * math.pi, n_rays, endpoint=False)
            units = [np.array([math.cos(a), math.sin(a)]) for a in angles]
        else:
            rng = np.random.default_rng(0)
            units = []
            for _ in range(n_rays):
                v = rng.normal(size=chart.dim)
                units.append(v / np.linalg.norm(v))
    return [np.linalg.solve(L.T, u) for u in units]


def growth_exponent(st: StaticSpacetime, which: str, base, radii,
                    n_rays: int = 16, bands=DEFAULT_BANDS,
                    tol: float = 1e-9) -> GrowthReport:
    """Fit the radial growth exponent of the warping function.

    Samples ``beta`` (``which='beta'``) or ``1/beta`` (``which='inv_beta'``)
    along unit-speed slice-geodesic rays from ``base`` at the given
    distances, takes the per-radius maximum over rays, and fits
    ``log max f`` against ``log r`` by least squares over the outer half of
    the radii.  Rays leaving the domain early only contribute the radii
    they reached; their count is reported as a truncation warning.
    """
    if which not in ("beta", "inv_beta"):
        raise ValueError("which must be 'beta' or 'inv_beta'")
    radii = np.asarray(radii, dtype=float)
    if len(radii) < 6 or np.any(np.diff(radii) <= 0.0):
        raise ValueError("need at least 6 strictly increasing radii")
    if radii[-1] < 10.0 * radii[0]:
        raise ValueError("radii must span at least one decade")
    base = st.chart.require_in_domain(base)

    per_radius: list[list[float]] = [[] for _ in radii]
    truncated = 0
    for v in _ray_directions(st.chart, base, n_rays):
        raw = integrate_slice_geodesic(st.chart, base, v, float(radii[-1]), tol)
        s_reach = float(raw.s[-1])
        if raw.termination != "reached_s_max":
            truncated += 1
        n = st.chart.dim
        ok = radii <= s_reach
        if not np.any(ok):
            continue
        pts = hermite_eval(raw.s, raw.y[:, :n], raw.y[:, n:], radii[ok])
        vals = st.beta_many(pts)
        if which == "inv_beta":
            vals = 1.0 / vals
        for idx, val in zip(np.nonzero(ok)[0], vals):
            per_radius[idx].append(float(val))

    used = [(float(r), max(vals)) for r, vals in zip(radii, per_radius) if vals]
    if len(used) < 4:
        raise ValueError("too few radii reachable inside the domain for a fit")
    outer = used[len(used) // 2:]
    lr = np.log([r for r, _ in outer])
    lf = np.log([f for _, f in outer])
    A = np.vstack([lr, np.ones_like(lr)]).T
    coef, *_ = np.linalg.lstsq(A, lf, rcond=None)
    exponent, intercept = float(coef[0]), float(coef[1])
    resid = float(np.max(np.abs(A @ coef - lf)))
    lo, hi = bands
    if exponent < lo:
        cls = SUBQUADRATIC
    elif exponent <= hi:
        cls = QUADRATIC
    else:
        cls = SUPERQUADRATIC
    return GrowthReport(exponent=exponent, classification=cls,
                        fit_residual=resid, base_point=tuple(base),
                        radii=tuple(float(r) for r in radii),
                        amplitude=math.exp(intercept), which=which,
                        truncated_rays=truncated,
                        samples=tuple(used))


# ---------------------------------------------------------------------------
# completeness probes


def _unit_direction(rng, ndim):
    while True:
        v = rng.normal(size=ndim)
        nv = float(np.linalg.norm(v))
        if nv > 1e-12:
            return v / nv


def _default_position_sampler(st):
    def sampler(rng, m):
        out = []
        while len(out) < m:
            p = rng.normal(size=st.dim) * 1.5
            if st.chart.contains(p):
                out.append(p)
        return np.array(out)
    return sampler


def _probe_worker(st, metric, x0, u, s_max, tol, blowup_threshold):
    if metric in (METRIC_G, METRIC_G_R):
        b = st.beta_at(x0)
        G = st.chart.metric_at(x0)
        L = np.linalg.cholesky(G)
        td = float(u[0]) / math.sqrt(b)
        xd = np.linalg.solve(L.T, u[1:])
        sign = -1.0 if metric == METRIC_G else 1.0
        thr = blowup_threshold if metric == METRIC_G else None
        try:
            tr = integrate_geodesic(st, GeodesicState(0.0, x0, td, xd), s_max,
                                    tol, blowup_threshold=thr or blowup_threshold,
                                    sign=sign)
        except StiffnessError:
            return ("inconclusive", None, None)
        return (tr.termination.kind, tr.termination.s_exit, tr)
    # conformal slice metric g_S / beta: unit speed means |x'|_g = sqrt(beta)
    b = st.beta_at(x0)
    G = st.chart.metric_at(x0)
    L = np.linalg.cholesky(G)
    xd = math.sqrt(b) * np.linalg.solve(L.T, u)
    try:
        raw = integrate_slice_geodesic(st.chart, x0, xd, s_max, tol,
                                       conformal_spacetime=st,
                                       coord_guard=1e100)
    except StiffnessError:
        return ("inconclusive", None, None)
    return (raw.termination, raw.s_exit, raw)


def completeness_probe(st: StaticSpacetime, metric: str, n_samples: int = 100,
                       s_max: float = 100.0, tol: float = 1e-9,
                       seed: int = 0, blowup_threshold: float = 1e8,
                       position_sampler: Optional[Callable] = None
                       ) -> ProbeReport:
    """Search for incomplete geodesics of the selected metric.

    Integrates ``n_samples`` random unit-speed geodesics up to parameter
    ``s_max``; any run that exits the domain or blows up at finite
    parameter is an incompleteness witness (unit speed makes the parameter
    an arclength for the Riemannian probes, and the auxiliary norm bounds
    arclength for the physical metric).  Runs killed by step-size
    underflow are counted as inconclusive, not as witnesses.
    """
    if metric not in (METRIC_G, METRIC_G_R, METRIC_G_S_STAR):
        raise ValueError("metric must be one of g, g_R, g_S_star")
    if n_samples < 1 or s_max <= 0.0:
        raise ValueError("need n_samples >= 1 and s_max > 0")
    rng = np.random.default_rng(seed)
    sampler = position_sampler or getattr(st, "position_sampler", None) \
        or _default_position_sampler(st)
    positions = np.asarray(sampler(rng, n_samples), dtype=float)
    ndir = st.dim + 1 if metric in (METRIC_G, METRIC_G_R) else st.dim
    dirs = [_unit_direction(rng, ndir) for _ in range(n_samples)]

    jobs = list(zip(positions, dirs))
    threads = int(os.environ.get("STATICGEO_THREADS", "1") or "1")

    def run(job):
        x0, u = job
        return _probe_worker(st, metric, x0, u, s_max, tol, blowup_threshold)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, jobs))
    else:
        outcomes = [run(j) for j in jobs]

    witness = None
    n_left = n_blow = n_inc = 0
    for i, (kind, s_exit, tr) in enumerate(outcomes):
        if kind == "left_domain":
            n_left += 1
        elif kind == "blow_up":
            n_blow += 1
        elif kind == "inconclusive":
            n_inc += 1
        else:
            continue
        if witness is None and kind in ("left_domain", "blow_up"):
            witness = ProbeWitness(sample_index=i, termination=kind,
                                   s_exit=float(s_exit), trajectory=tr)
    verdict = "witness_found" if witness is not None else "no_witness"
    return ProbeReport(verdict=verdict, witness=witness, n_samples=n_samples,
                       s_max=s_max, metric_probed=metric,
                       n_left_domain=n_left, n_blow_up=n_blow,
                       n_inconclusive=n_inc)


# ---------------------------------------------------------------------------
# causal arrival


def conformal_slice_chart(st: StaticSpacetime) -> Chart:
    """The slice chart re-metrized by ``g_S / beta`` (connection handled
    separately; this carries what distance minimization needs)."""
    chart = st.chart

    def metric(x):
        return np.asarray(chart.metric_fn(x), dtype=float) / float(st.beta_fn(x))

    def metric_b(pts):
        return chart.metric_many(pts) / st.beta_many(pts)[:, None, None]

    def metric_jac(x):
        g = np.asarray(chart.metric_fn(x), dtype=float)
        b = float(st.beta_fn(x))
        dg = chart.metric_jacobian_at(x)
        db = st.beta_grad_at(x)
        return dg / b - np.einsum("k,ij->kij", db, g) / (b * b)

    def metric_jac_b(pts):
        g = chart.metric_many(pts)
        b = st.beta_many(pts)
        dg = chart.metric_jacobian_many(pts)
        db = st.beta_grad_many(pts)
        return dg / b[:, None, None, None] \
            - np.einsum("mk,mij->mkij", db, g) / (b * b)[:, None, None, None]

    return Chart(dim=chart.dim, label=f"{chart.label}/conformal",
                 in_domain=chart.in_domain, metric_fn=metric,
                 metric_jacobian_fn=metric_jac,
                 metric_batch_fn=metric_b,
                 metric_jacobian_batch_fn=metric_jac_b,
                 fd_step=chart.fd_step, fd_floor=chart.fd_floor,
                 boundary_margin=chart.boundary_margin,
                 segment_in_domain=chart.segment_in_domain,
                 trivial_domain=chart.trivial_domain)


def causal_arrival(st: StaticSpacetime, p, x_target,
                   opts: DistanceOpts = DistanceOpts()) -> ArrivalResult:
    """Earliest causal arrival time at a slice point from event ``p``.

    A point ``(t, x)`` lies in the causal future of ``p = (t_p, x_p)``
    exactly when ``t - t_p`` is at least the distance from ``x_p`` to ``x``
    in the conformal slice metric ``g_S / beta``, so the infimum of arrival
    times is ``t_p`` plus that distance; the infimum is attained exactly
    when a minimizing conformal curve exists (the boundary-hugging case is
    inherited from the distance solver's attainment flag).
    """
    p = np.asarray(p, dtype=float)
    t_p, x_p = float(p[0]), p[1:]
    conf = conformal_slice_chart(st)
    d = slice_distance(conf, x_p, x_target, opts)
    return ArrivalResult(infimum_t=t_p + d.length, attained=d.attained,
                         curve=d.minimizer)
