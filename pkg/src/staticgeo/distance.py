"""Geodesic distance estimation on a slice by discrete curve minimization.

Minimizes the discrete Dirichlet energy of curves between two fixed
endpoints over several seed curves.  Obstacle domains are handled by a
one-sided quadratic barrier on the chart's boundary margin, with the
barrier weight doubling on a continuation schedule until the constraint
violation is negligible; charts without a margin fall back to rejecting
infeasible iterates inside the line search.  Non-attained infima are
flagged when the best curve hugs the domain boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import _curvefunc as cf
from .chart import Chart, SliceCurve, as_point, uniform_resample
from .errors import SeedFailureError, UnreachableError
from .optimize import LaplacianPreconditioner, lbfgs

DEFAULT_BOUNDARY_EPS = 1e-4


@dataclass(frozen=True)
class DistanceOpts:
    n_segments: int = 256
    n_seeds: int = 3
    max_iter: int = 600
    gtol: float = 1e-5            # target scale for the discrete stationarity defect
    boundary_eps: float = DEFAULT_BOUNDARY_EPS
    penalty_init: float = 1.0
    penalty_rounds: int = 40
    violation_tol: float = 1e-8
    seed: int = 0
    coarse_segments: int = 64
    length_rtol: float = 1e-9     # seed loop stops when lengths agree this well


@dataclass(frozen=True)
class DistanceResult:
    length: float
    attained: bool
    minimizer: Optional[SliceCurve]
    iterations: int


def _chord(x0, x1, n_segments):
    s = np.linspace(0.0, 1.0, n_segments + 1)[:, None]
    return (1.0 - s) * x0[None, :] + s * x1[None, :]


def _fourier_bump(rng, x0, x1, n_segments, scale):
    s = np.linspace(0.0, 1.0, n_segments + 1)
    nodes = _chord(x0, x1, n_segments)
    for k in range(1, 4):
        amp = rng.normal(size=x0.shape[0]) * scale / k
        nodes += np.sin(math.pi * k * s)[:, None] * amp[None, :]
    return nodes


def _seed_curves(chart, rng, x0, x1, n_segments, n_seeds, need_feasible):
    scale = 0.35 * (float(np.linalg.norm(x1 - x0)) + 0.5)
    raw = [_chord(x0, x1, n_segments)]
    for _ in range(n_seeds):
        raw.append(_fourier_bump(rng, x0, x1, n_segments, scale))
    if not need_feasible:
        return raw
    seeds = [nodes for nodes in raw if cf.nodes_feasible(chart, nodes)]
    attempts = 0
    while not seeds and attempts < 60:
        cand = _fourier_bump(rng, x0, x1, n_segments, scale * (1.0 + attempts / 10.0))
        if cf.nodes_feasible(chart, cand):
            seeds.append(cand)
        attempts += 1
    if not seeds:
        raise UnreachableError(
            "no seed curve stays inside the domain after repeated projection "
            "attempts; the endpoints may lie in different components")
    return seeds


def _minimize_energy(chart, nodes0, opts: DistanceOpts):
    """Energy descent with barrier continuation; returns (nodes, iterations)."""
    n_nodes, dim = nodes0.shape
    x0n, x1n = nodes0[0].copy(), nodes0[-1].copy()
    margin = chart.boundary_margin
    use_barrier = margin is not None

    def unpack(z):
        nodes = np.empty((n_nodes, dim))
        nodes[0] = x0n
        nodes[-1] = x1n
        nodes[1:-1] = z.reshape(n_nodes - 2, dim)
        return nodes

    total_iters = 0
    z = nodes0[1:-1].reshape(-1).copy()
    n_seg = n_nodes - 1
    precond = LaplacianPreconditioner(n_nodes - 2, dim, scale=n_seg)
    gtol = opts.gtol / n_seg

    if not use_barrier:
        def fg(zv):
            nodes = unpack(zv)
            e, grad = cf.kinetic_and_grad(chart, nodes)
            return e, grad[1:-1].reshape(-1)

        def feas(zv):
            return cf.nodes_feasible(chart, unpack(zv))

        res = lbfgs(fg, z, gtol=gtol, max_iter=opts.max_iter, feasible=feas,
                    precond=precond)
        return unpack(res.x), res.iterations

    mids_matter = chart.segment_in_domain is not None
    weight = opts.penalty_init
    for _ in range(opts.penalty_rounds):
        def fg(zv, w=weight):
            nodes = unpack(zv)
            e, grad = cf.kinetic_and_grad(chart, nodes)
            pen, pgrad = cf.margin_penalty_and_grad(margin, nodes, w,
                                                    include_mids=mids_matter)
            return e + pen, (grad + pgrad)[1:-1].reshape(-1)

        res = lbfgs(fg, z, gtol=gtol, max_iter=opts.max_iter, precond=precond)
        z = res.x
        total_iters += res.iterations
        if cf.max_violation(margin, unpack(z),
                            include_mids=mids_matter) <= opts.violation_tol:
            break
        weight *= 2.0
    else:
        raise UnreachableError(
            "barrier continuation could not push the curve into the domain; "
            "the endpoints may lie in different components")
    return unpack(z), total_iters


def slice_distance(chart: Chart, x0, x1, opts: DistanceOpts = DistanceOpts()
                   ) -> DistanceResult:
    """Estimate the geodesic distance between two points of the slice.

    Runs curve-energy minimization from a straight chord plus randomized
    seed curves and reports the shortest discrete length found.  The
    ``attained`` flag is false when the best curve approaches the domain
    boundary closer than ``opts.boundary_eps``: the infimum then appears to
    be realized only in the closure of the domain.
    """
    x0 = chart.require_in_domain(x0)
    x1 = chart.require_in_domain(x1)
    if np.array_equal(x0, x1):
        nodes = np.tile(x0, (max(2, opts.coarse_segments) + 1, 1))
        return DistanceResult(0.0, True, SliceCurve(nodes), 0)

    rng = np.random.default_rng(opts.seed)
    need_feasible = chart.boundary_margin is None
    seeds = _seed_curves(chart, rng, x0, x1, opts.coarse_segments,
                         opts.n_seeds, need_feasible)

    best_nodes = None
    best_len = math.inf
    iterations = 0
    for seed_nodes in seeds:
        nodes, its = _minimize_energy(chart, seed_nodes, opts)
        iterations += its
        if opts.n_segments > opts.coarse_segments:
            fine = uniform_resample(SliceCurve(nodes), opts.n_segments).nodes
            nodes, its = _minimize_energy(chart, fine, opts)
            iterations += its
        length = cf.curve_length(chart, nodes)
        close = abs(length - best_len) <= opts.length_rtol * (1.0 + best_len)
        if length < best_len:
            best_len = length
            best_nodes = nodes
        if close:
            break  # two independent seeds agree; further seeds add nothing

    if best_nodes is None:
        raise SeedFailureError("all curve seeds failed to minimize")
    dist_to_boundary = cf.boundary_distance(chart, best_nodes, opts.boundary_eps)
    attained = dist_to_boundary >= opts.boundary_eps
    return DistanceResult(best_len, attained, SliceCurve(best_nodes), iterations)
