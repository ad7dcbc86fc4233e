"""Standard static spacetimes ``R x S`` with metric ``-beta dt^2 + g_S``.

The geodesic system splits into a slice equation driven by the warping
function and a first integral for the time component:

    x'' = -Gamma(x', x') - (1/2) t'^2 grad(beta),      beta(x) t' = lambda,

with ``grad`` the metric gradient on the slice.  Along any geodesic both
``lambda`` and the line-element constant ``C = g(gamma', gamma')`` are
conserved; the integrator monitors their drift rather than enforcing it,
so the reported drift doubles as an accuracy certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import _backend
from ._backend import BetaSpec, GeometrySpec
from .chart import Chart, as_point
from .errors import OutOfDomainError, StiffnessError

DEFAULT_TOL = 1e-10
DEFAULT_BLOWUP_THRESHOLD = 1e8
# cap on the step size: long limit-riding steps in asymptotic coasting
# phases trade negligible cost for much lower committed error per step
DEFAULT_MAX_STEP = 0.5
NULL_EPS = 1e-9

TIMELIKE = "timelike"
NULL = "null"
SPACELIKE = "spacelike"


@dataclass(frozen=True)
class StaticSpacetime:
    """A chart plus a positive warping function for the time direction.

    ``beta_grad_fn`` supplies the coordinate partial derivatives of the
    warping function; when absent a central finite-difference fallback
    with the chart's step policy is used.  The auxiliary Riemannian metric
    (time-time sign flipped to ``+beta``) is derived from the same data.
    """

    chart: Chart
    beta_fn: Callable[[np.ndarray], float]
    beta_grad_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = "spacetime"
    beta_batch_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    beta_grad_batch_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    beta_kernel: object = None
    position_sampler: Optional[Callable] = None

    def __post_init__(self):
        object.__setattr__(self, "_geom_spec", _geometry_spec(self.chart))
        object.__setattr__(self, "_beta_spec", BetaSpec(
            beta=lambda x: float(self.beta_fn(x)),
            beta_grad=self.beta_grad_at, beta_kernel=self.beta_kernel))

    @property
    def dim(self) -> int:
        return self.chart.dim

    def beta_at(self, x) -> float:
        p = self.chart.require_in_domain(x)
        b = float(self.beta_fn(p))
        if not (b > 0.0) or not np.isfinite(b):
            raise OutOfDomainError(p, f"{self.label}: beta must stay positive")
        return b

    def beta_grad_at(self, x) -> np.ndarray:
        """Coordinate partials of the warping function (index not raised)."""
        p = self.chart.require_in_domain(x)
        if self.beta_grad_fn is not None:
            return np.asarray(self.beta_grad_fn(p), dtype=float)
        h = self.chart.fd_steps(p)
        out = np.empty(self.dim)
        for k in range(self.dim):
            q = p.copy()
            q[k] = p[k] + h[k]
            bp = float(self.beta_fn(q))
            q[k] = p[k] - h[k]
            bm = float(self.beta_fn(q))
            out[k] = (bp - bm) / (2.0 * h[k])
        return out

    def beta_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.beta_batch_fn is not None:
            return np.asarray(self.beta_batch_fn(pts), dtype=float)
        return np.array([float(self.beta_fn(p)) for p in pts])

    def beta_grad_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.beta_grad_batch_fn is not None:
            return np.asarray(self.beta_grad_batch_fn(pts), dtype=float)
        return np.stack([self.beta_grad_at(p) for p in pts])

    # backend plumbing -------------------------------------------------------

    def geometry_spec(self) -> GeometrySpec:
        return self._geom_spec

    def beta_spec(self) -> BetaSpec:
        return self._beta_spec


def _geometry_spec(chart: Chart) -> GeometrySpec:
    # analytic symbols bypass the validating wrapper on the hot path
    christoffel = chart.christoffel_fn if chart.christoffel_fn is not None \
        else chart.christoffel_at
    return GeometrySpec(n=chart.dim, metric=chart.metric_fn, christoffel=christoffel,
                        in_domain=chart.in_domain, segment=chart.segment_in_domain,
                        metric_kernel=chart.metric_kernel,
                        domain_kernel=chart.domain_kernel)


class StateDerivative(NamedTuple):
    t_dot: float
    x_dot: np.ndarray
    t_ddot: float
    x_ddot: np.ndarray


@dataclass(frozen=True)
class GeodesicState:
    """Phase-space point (t, x, t', x') of the geodesic flow."""

    t: float
    x: np.ndarray
    t_dot: float
    x_dot: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", as_point(self.x))
        object.__setattr__(self, "x_dot", as_point(self.x_dot, len(self.x)))

    def as_vector(self) -> np.ndarray:
        return np.concatenate(([self.t], self.x, [self.t_dot], self.x_dot))

    @staticmethod
    def from_vector(y: np.ndarray, n: int) -> "GeodesicState":
        return GeodesicState(float(y[0]), y[1:1 + n].copy(),
                             float(y[1 + n]), y[2 + n:].copy())


@dataclass(frozen=True)
class Termination:
    kind: str                      # reached_s_max | left_domain | blow_up
    s_exit: Optional[float] = None

    @property
    def reached_s_max(self) -> bool:
        return self.kind == "reached_s_max"


@dataclass(frozen=True)
class GeodesicTrajectory:
    """Sampled geodesic with conservation-drift report.

    Samples sit at the integrator's accepted steps.  ``lam``, ``C`` and
    ``aux_norm_sq`` are recomputed from the sampled states, so drift
    reflects genuine integration error.
    """

    spacetime: StaticSpacetime
    s: np.ndarray                  # (m,)
    t: np.ndarray                  # (m,)
    x: np.ndarray                  # (m, n)
    t_dot: np.ndarray              # (m,)
    x_dot: np.ndarray              # (m, n)
    lam: np.ndarray                # (m,)
    C: np.ndarray                  # (m,)
    aux_norm_sq: np.ndarray        # (m,)
    lambda0: float
    C0: float
    termination: Termination

    @property
    def drift(self) -> tuple[float, float]:
        return (float(np.max(np.abs(self.lam - self.lambda0))),
                float(np.max(np.abs(self.C - self.C0))))

    @property
    def n_samples(self) -> int:
        return len(self.s)

    def state(self, i: int) -> GeodesicState:
        return GeodesicState(float(self.t[i]), self.x[i].copy(),
                             float(self.t_dot[i]), self.x_dot[i].copy())

    @property
    def samples(self):
        return [(float(self.s[i]), self.state(i)) for i in range(self.n_samples)]


# ---------------------------------------------------------------------------
# pointwise operations


def lambda_of(st: StaticSpacetime, state: GeodesicState) -> float:
    """Time constant of motion ``beta(x) t'``."""
    return st.beta_at(state.x) * state.t_dot


def line_element(st: StaticSpacetime, state: GeodesicState) -> float:
    """C = g(gamma', gamma') = -beta t'^2 + g_S(x', x')."""
    G = st.chart.metric_at(state.x)
    return float(-st.beta_at(state.x) * state.t_dot**2
                 + state.x_dot @ G @ state.x_dot)


def aux_norm_sq(st: StaticSpacetime, state: GeodesicState) -> float:
    """Squared norm under the auxiliary Riemannian metric ``beta dt^2 + g_S``.

    Equals ``C + 2 lambda^2 / beta`` identically, which turns the conserved
    pair (lambda, C) into a runtime bound on the state.
    """
    G = st.chart.metric_at(state.x)
    return float(st.beta_at(state.x) * state.t_dot**2
                 + state.x_dot @ G @ state.x_dot)


def causal_character(st: StaticSpacetime, state: GeodesicState,
                     null_eps: float = NULL_EPS) -> str:
    c = line_element(st, state)
    if abs(c) <= null_eps:
        return NULL
    return TIMELIKE if c < 0.0 else SPACELIKE


def geodesic_rhs(st: StaticSpacetime, state: GeodesicState) -> StateDerivative:
    """State derivative of the geodesic system.

    The second-order time equation is the derivative form of the first
    integral ``beta t' = lambda``:  t'' = -t' (dbeta . x') / beta.
    """
    x = st.chart.require_in_domain(state.x)
    G = st.chart.metric_at(x)
    Gam = st.chart.christoffel_at(x)
    b = st.beta_at(x)
    db = st.beta_grad_at(x)
    grad_up = np.linalg.solve(G, db)
    xdd = -np.einsum("kij,i,j->k", Gam, state.x_dot, state.x_dot) \
        - 0.5 * state.t_dot**2 * grad_up
    tdd = 0.0 if state.t_dot == 0.0 else -state.t_dot * float(db @ state.x_dot) / b
    return StateDerivative(state.t_dot, state.x_dot.copy(), tdd, xdd)


# ---------------------------------------------------------------------------
# integration


def _monitors(st: StaticSpacetime, y: np.ndarray):
    n = st.dim
    x = y[:, 1:1 + n]
    td = y[:, 1 + n]
    xd = y[:, 2 + n:]
    b = st.beta_many(x)
    G = st.chart.metric_many(x)
    q = np.einsum("mi,mij,mj->m", xd, G, xd)
    lam = b * td
    C = -b * td * td + q
    aux = b * td * td + q
    return lam, C, aux


def integrate_geodesic(st: StaticSpacetime, init: GeodesicState, s_max: float,
                       tol: float = DEFAULT_TOL, *,
                       blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD,
                       sign: float = -1.0, s0: float = 0.0,
                       max_steps: int = 5_000_000,
                       max_step: float = DEFAULT_MAX_STEP) -> GeodesicTrajectory:
    """Adaptively integrate the geodesic system from ``init`` up to ``s_max``.

    Termination is ``reached_s_max``, ``left_domain`` (a step ran into the
    chart boundary) or ``blow_up`` (auxiliary norm exceeded
    ``blowup_threshold``; a numerical incompleteness witness, not a proof).
    A step-size underflow away from the boundary raises
    :class:`StiffnessError` carrying the partial trajectory.

    ``sign=+1`` integrates the auxiliary Riemannian product metric instead
    of the Lorentzian one (used by completeness probes).
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    st.chart.require_in_domain(init.x)
    st.beta_at(init.x)
    y0 = init.as_vector()
    aux_thr = blowup_threshold * blowup_threshold
    try:
        raw = _backend.integrate_spacetime(
            st.geometry_spec(), st.beta_spec(), y0, s0, s_max, tol, tol,
            sign=sign, aux_sq_threshold=aux_thr, max_steps=max_steps,
            max_step=max_step)
    except StiffnessError as exc:
        if exc.trajectory is not None:
            exc.trajectory = _wrap(st, exc.trajectory)
        raise
    return _wrap(st, raw)


def _wrap(st: StaticSpacetime, raw) -> GeodesicTrajectory:
    n = st.dim
    y = raw.y
    lam, C, aux = _monitors(st, y)
    term = Termination(raw.termination, raw.s_exit)
    return GeodesicTrajectory(
        spacetime=st, s=raw.s, t=y[:, 0], x=y[:, 1:1 + n], t_dot=y[:, 1 + n],
        x_dot=y[:, 2 + n:], lam=lam, C=C, aux_norm_sq=aux,
        lambda0=float(lam[0]), C0=float(C[0]), termination=term)


def integrate_slice_geodesic(chart: Chart, x0, x_dot0, s_max: float,
                             tol: float = DEFAULT_TOL, *, phi_grad=None,
                             force_grad=None, coord_guard: float = 1e150,
                             conformal_spacetime: Optional[StaticSpacetime] = None,
                             max_steps: int = 5_000_000,
                             max_step: float = DEFAULT_MAX_STEP):
    """Integrate a geodesic of the slice metric (state ``(x, x')``).

    With ``conformal_spacetime`` given, the conformally rescaled metric
    ``g_S / beta`` is used, assembled from its own connection symbols.
    Returns the raw sampled trajectory.
    """
    x0 = chart.require_in_domain(x0)
    y0 = np.concatenate([x0, as_point(x_dot0, chart.dim)])
    geom = _geometry_spec(chart)
    conf = None
    if conformal_spacetime is not None:
        conf = conformal_spacetime.beta_spec()
    return _backend.integrate_slice(geom, y0, 0.0, s_max, tol, tol,
                                    phi_grad=phi_grad, force_grad=force_grad,
                                    coord_guard=coord_guard,
                                    conformal_inv_beta=conf, max_steps=max_steps,
                                    max_step=max_step)
