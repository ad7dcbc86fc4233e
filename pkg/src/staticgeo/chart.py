"""Riemannian coordinate charts on the spatial slice.

A :class:`Chart` is a single coordinate patch: a dimension, a domain
predicate, and a metric evaluator, optionally augmented with analytic
Christoffel symbols and metric derivatives (finite-difference fallbacks are
used otherwise).  Charts are immutable values; all evaluators must be pure
functions so charts can be shared freely across concurrent solves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateMetricError, OutOfDomainError

SYMMETRY_TOL = 1e-12


def as_point(x, dim: Optional[int] = None) -> np.ndarray:
    """Coerce coordinates to a 1-d float64 array, checking length if given."""
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if p.ndim != 1:
        raise ValueError(f"a point must be a flat coordinate tuple, got shape {p.shape}")
    if dim is not None and p.shape[0] != dim:
        raise ValueError(f"point has {p.shape[0]} coordinates, chart expects {dim}")
    return p


@dataclass(frozen=True)
class Chart:
    """A coordinate patch ``(S, g_S)`` with an explicit domain predicate.

    Parameters
    ----------
    dim : int
        Number of spatial coordinates.
    label : str
        Human-readable name used in error messages and reports.
    in_domain : callable
        Predicate ``x -> bool`` for coordinate tuples.
    metric_fn : callable
        ``x -> (dim, dim)`` symmetric positive-definite matrix.
    christoffel_fn : callable, optional
        Analytic symbols ``x -> (dim, dim, dim)`` indexed ``[k, i, j]``;
        when absent, central finite differences of ``metric_fn`` are used.
    metric_jacobian_fn : callable, optional
        Analytic derivatives ``x -> (dim, dim, dim)`` indexed
        ``[k, i, j] = d_k g_ij``; finite-difference fallback otherwise.
    fd_step, fd_floor : float
        Relative finite-difference step and its absolute floor.
    boundary_margin : callable, optional
        Smooth-ish signed margin to the domain boundary (positive inside).
        Used by curve minimizers for barrier penalties and boundary
        proximity detection; purely optional.
    segment_in_domain : callable, optional
        ``(a, b) -> bool`` deciding whether the straight coordinate segment
        from ``a`` to ``b`` stays in the domain.  Needed when the forbidden
        set is lower-dimensional (a slit) and pointwise checks can miss it.
    metric_kernel, domain_kernel : optional
        Descriptors enabling the compiled integrator backend.
    """

    dim: int
    label: str
    in_domain: Callable[[np.ndarray], bool]
    metric_fn: Callable[[np.ndarray], np.ndarray]
    christoffel_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    metric_jacobian_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    fd_step: float = 1e-6
    fd_floor: float = 1e-8
    boundary_margin: Optional[Callable[[np.ndarray], float]] = None
    segment_in_domain: Optional[Callable[[np.ndarray, np.ndarray], bool]] = None
    metric_batch_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    metric_jacobian_batch_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    metric_kernel: object = None
    domain_kernel: object = None
    trivial_domain: bool = False    # in_domain is identically true

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("chart dimension must be a positive integer")
        if not (self.fd_step > 0 and self.fd_floor > 0):
            raise ValueError("finite-difference steps must be positive")

    # -- domain ------------------------------------------------------------

    def contains(self, x) -> bool:
        return bool(self.in_domain(as_point(x, self.dim)))

    def require_in_domain(self, x) -> np.ndarray:
        p = as_point(x, self.dim)
        if not self.in_domain(p):
            raise OutOfDomainError(p, self.label)
        return p

    def segment_ok(self, a: np.ndarray, b: np.ndarray) -> bool:
        """Whether the coordinate segment a->b avoids the forbidden set."""
        if self.segment_in_domain is not None:
            return bool(self.segment_in_domain(a, b))
        return True

    # -- metric ------------------------------------------------------------

    def metric_at(self, x) -> np.ndarray:
        """Validated metric matrix at ``x`` (symmetric positive-definite)."""
        p = self.require_in_domain(x)
        g = np.asarray(self.metric_fn(p), dtype=float)
        if g.shape != (self.dim, self.dim):
            raise DegenerateMetricError(
                f"metric on '{self.label}' returned shape {g.shape}, "
                f"expected {(self.dim, self.dim)}")
        if np.max(np.abs(g - g.T), initial=0.0) > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(g)))):
            raise DegenerateMetricError(f"metric on '{self.label}' is not symmetric at {tuple(p)}")
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            raise DegenerateMetricError(
                f"metric on '{self.label}' is not positive-definite at {tuple(p)}") from None
        return g

    def inverse_metric_at(self, x) -> np.ndarray:
        g = self.metric_at(x)
        try:
            return np.linalg.inv(g)
        except np.linalg.LinAlgError:
            raise DegenerateMetricError(
                f"metric on '{self.label}' is singular at {tuple(as_point(x))}") from None

    def fd_steps(self, p: np.ndarray) -> np.ndarray:
        return np.maximum(self.fd_step * np.abs(p), self.fd_floor)

    def metric_jacobian_at(self, x) -> np.ndarray:
        """Derivatives ``d_k g_ij``, analytic when supplied, else central FD."""
        p = self.require_in_domain(x)
        return self._metric_jacobian_unchecked(p)

    def _metric_jacobian_unchecked(self, p: np.ndarray) -> np.ndarray:
        # barrier-penalized minimizers may evaluate slightly outside the domain
        if self.metric_jacobian_fn is not None:
            return np.asarray(self.metric_jacobian_fn(p), dtype=float)
        h = self.fd_steps(p)
        out = np.empty((self.dim, self.dim, self.dim))
        for k in range(self.dim):
            q = p.copy()
            q[k] = p[k] + h[k]
            gp = np.asarray(self.metric_fn(q), dtype=float)
            q[k] = p[k] - h[k]
            gm = np.asarray(self.metric_fn(q), dtype=float)
            out[k] = (gp - gm) / (2.0 * h[k])
        return out

    def christoffel_at(self, x) -> np.ndarray:
        """Symbols ``Gamma^k_ij`` of the Levi-Civita connection.

        Uses the analytic evaluator verbatim when present; otherwise builds
        the symbols from (finite-difference) metric derivatives.  Symmetry
        in the two lower indices holds by construction.
        """
        p = self.require_in_domain(x)
        if self.christoffel_fn is not None:
            return np.asarray(self.christoffel_fn(p), dtype=float)
        g = np.asarray(self.metric_fn(p), dtype=float)
        try:
            ginv = np.linalg.inv(g)
        except np.linalg.LinAlgError:
            raise DegenerateMetricError(
                f"metric on '{self.label}' is singular at {tuple(p)}") from None
        dg = self.metric_jacobian_at(p)
        # Gamma^k_ij = 1/2 g^{kl} (d_i g_lj + d_j g_li - d_l g_ij)
        bracket = np.einsum("ilj->lij", dg) + np.einsum("jli->lij", dg) - dg
        return 0.5 * np.einsum("kl,lij->kij", ginv, bracket)

    # -- batched variants (used by curve functionals) -----------------------

    def metric_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.metric_batch_fn is not None:
            return np.asarray(self.metric_batch_fn(pts), dtype=float)
        return np.stack([np.asarray(self.metric_fn(p), dtype=float) for p in pts])

    def metric_jacobian_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.metric_jacobian_batch_fn is not None:
            return np.asarray(self.metric_jacobian_batch_fn(pts), dtype=float)
        return np.stack([self._metric_jacobian_unchecked(p) for p in pts])


# module-level operation aliases, for callers that prefer functions
def metric_at(chart: Chart, x) -> np.ndarray:
    return chart.metric_at(x)


def christoffel_at(chart: Chart, x) -> np.ndarray:
    return chart.christoffel_at(x)


# ---------------------------------------------------------------------------
# curves on the slice


@dataclass(frozen=True)
class SliceCurve:
    """A discrete curve on the uniform grid ``s_i = i/N`` over [0, 1]."""

    nodes: np.ndarray  # (N+1, dim)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[0] < 3:
            raise ValueError("a slice curve needs at least 3 nodes (N >= 2)")
        object.__setattr__(self, "nodes", nodes)

    @property
    def n_segments(self) -> int:
        return self.nodes.shape[0] - 1

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nodes.shape[0])

    def require_in_domain(self, chart: Chart) -> None:
        for p in self.nodes:
            chart.require_in_domain(p)

    def length(self, chart: Chart) -> float:
        """Discrete length: segment norms under midpoint metrics."""
        seg = self.nodes[1:] - self.nodes[:-1]
        mid = 0.5 * (self.nodes[1:] + self.nodes[:-1])
        G = chart.metric_many(mid)
        sq = np.einsum("si,sij,sj->s", seg, G, seg)
        return float(np.sum(np.sqrt(np.maximum(sq, 0.0))))

    def energy(self, chart: Chart) -> float:
        """Discrete Dirichlet energy ``1/2 int |x'|^2`` (midpoint metric)."""
        n_seg = self.n_segments
        seg = self.nodes[1:] - self.nodes[:-1]
        mid = 0.5 * (self.nodes[1:] + self.nodes[:-1])
        G = chart.metric_many(mid)
        sq = np.einsum("si,sij,sj->s", seg, G, seg)
        return 0.5 * n_seg * float(np.sum(sq))


def uniform_resample(curve: SliceCurve, n_segments: int) -> SliceCurve:
    """Linear-in-coordinates resampling of a curve onto a new uniform grid."""
    old = curve.nodes
    s_old = np.linspace(0.0, 1.0, old.shape[0])
    s_new = np.linspace(0.0, 1.0, n_segments + 1)
    cols = [np.interp(s_new, s_old, old[:, j]) for j in range(old.shape[1])]
    return SliceCurve(np.stack(cols, axis=1))


# ---------------------------------------------------------------------------
# stock charts (used by tests and the catalog)


def euclidean_chart(dim: int, label: str = "euclidean") -> Chart:
    eye = np.eye(dim)
    zeros = np.zeros((dim, dim, dim))
    return Chart(
        dim=dim,
        label=label,
        in_domain=lambda x: True,
        metric_fn=lambda x: eye,
        christoffel_fn=lambda x: zeros,
        metric_jacobian_fn=lambda x: zeros,
        metric_batch_fn=lambda pts: np.broadcast_to(eye, (len(pts), dim, dim)),
        metric_jacobian_batch_fn=lambda pts: np.zeros((len(pts), dim, dim, dim)),
        trivial_domain=True,
    )


def polar_chart(label: str = "polar") -> Chart:
    """Flat plane in polar coordinates (r, theta), r > 0."""

    def metric(x):
        return np.diag([1.0, x[0] ** 2])

    def jac(x):
        out = np.zeros((2, 2, 2))
        out[0, 1, 1] = 2.0 * x[0]
        return out

    def christoffel(x):
        r = x[0]
        out = np.zeros((2, 2, 2))
        out[0, 1, 1] = -r
        out[1, 0, 1] = out[1, 1, 0] = 1.0 / r
        return out

    def metric_b(pts):
        out = np.zeros((len(pts), 2, 2))
        out[:, 0, 0] = 1.0
        out[:, 1, 1] = pts[:, 0] ** 2
        return out

    def jac_b(pts):
        out = np.zeros((len(pts), 2, 2, 2))
        out[:, 0, 1, 1] = 2.0 * pts[:, 0]
        return out

    return Chart(
        dim=2,
        label=label,
        in_domain=lambda x: x[0] > 0.0,
        metric_fn=metric,
        christoffel_fn=christoffel,
        metric_jacobian_fn=jac,
        metric_batch_fn=metric_b,
        metric_jacobian_batch_fn=jac_b,
        boundary_margin=lambda x: x[0],
    )


def schwarzschild_radial_chart(mass: float = 1.0, label: str = "schw-radial") -> Chart:
    """One-dimensional radial line element ``dr^2 / (1 - 2m/r)``, r > 2m."""

    def metric(x):
        return np.array([[1.0 / (1.0 - 2.0 * mass / x[0])]])

    def jac(x):
        r = x[0]
        f = 1.0 - 2.0 * mass / r
        return np.array([[[-(2.0 * mass / r**2) / f**2]]])

    def christoffel(x):
        r = x[0]
        f = 1.0 - 2.0 * mass / r
        # Gamma^r_rr = -f'/(2 f) with g_rr = 1/f
        return np.array([[[-(2.0 * mass / r**2) / (2.0 * f)]]])

    return Chart(
        dim=1,
        label=label,
        in_domain=lambda x: x[0] > 2.0 * mass,
        metric_fn=metric,
        christoffel_fn=christoffel,
        metric_jacobian_fn=jac,
        boundary_margin=lambda x: x[0] - 2.0 * mass,
    )
