"""Catalog of ready-made spacetimes used by the CLI and the test batteries.

Each entry bundles a chart, a warping function (with analytic gradient and
kernel descriptors for the compiled backend), a provenance note and a
position sampler for randomized batteries.  Entries are validated on a
small sample grid at construction time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ._backend.kernels import (BETA_CONST, BETA_POWQ, BETA_SCHW, BETA_SEC2,
                               BetaKernel, DOM_ABS0_LT, DOM_ALL, DOM_BALL,
                               DOM_COORD0_GT, DOM_SLIT, DomainKernel,
                               METRIC_CONF_SEC2, METRIC_FLAT, METRIC_SCHW_EQ,
                               MetricKernel)
from .chart import Chart
from .errors import ConfigError
from .spacetime import StaticSpacetime


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    spacetime: StaticSpacetime
    note: str
    sample_positions: Callable[[np.ndarray, int], np.ndarray]  # (rng, m) -> (m, n)


def _flat_chart(dim, label, in_domain=None, margin=None, segment=None,
                domain_kernel=DomainKernel(DOM_ALL)) -> Chart:
    eye = np.eye(dim)
    zeros = np.zeros((dim, dim, dim))
    return Chart(
        dim=dim, label=label,
        in_domain=(lambda x: True) if in_domain is None else in_domain,
        metric_fn=lambda x: eye,
        christoffel_fn=lambda x: zeros,
        metric_jacobian_fn=lambda x: zeros,
        metric_batch_fn=lambda pts: np.broadcast_to(eye, (len(pts), dim, dim)),
        metric_jacobian_batch_fn=lambda pts: np.zeros((len(pts), dim, dim, dim)),
        boundary_margin=margin, segment_in_domain=segment,
        metric_kernel=MetricKernel(METRIC_FLAT), domain_kernel=domain_kernel,
        trivial_domain=in_domain is None)


def _powq_beta(p: float):
    """beta = (1 + |x|^2)^p with analytic gradient and batch forms."""
    def beta(x):
        return (1.0 + float(np.dot(x, x))) ** p

    def grad(x):
        u = 1.0 + float(np.dot(x, x))
        return (2.0 * p * u ** (p - 1.0)) * np.asarray(x, dtype=float)

    def beta_b(pts):
        u = 1.0 + np.einsum("mi,mi->m", pts, pts)
        return u ** p

    def grad_b(pts):
        u = 1.0 + np.einsum("mi,mi->m", pts, pts)
        return (2.0 * p * u ** (p - 1.0))[:, None] * pts

    return beta, grad, beta_b, grad_b, BetaKernel(BETA_POWQ, (p,))


def _const_beta(c: float = 1.0):
    def beta(x):
        return c

    def grad(x):
        return np.zeros(np.shape(x))

    return (beta, grad, lambda pts: np.full(len(pts), c),
            lambda pts: np.zeros_like(np.asarray(pts, dtype=float)),
            BetaKernel(BETA_CONST, (c,)))


def _box_sampler(lo, hi):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)

    def sample(rng, m):
        return lo + (hi - lo) * rng.random((m, len(lo)))

    return sample


def _make_minkowski() -> CatalogEntry:
    beta, grad, beta_b, grad_b, bk = _const_beta(1.0)
    st = StaticSpacetime(chart=_flat_chart(1, "minkowski-slice"),
                         beta_fn=beta, beta_grad_fn=grad, label="minkowski",
                         beta_batch_fn=beta_b, beta_grad_batch_fn=grad_b,
                         beta_kernel=bk)
    return CatalogEntry("minkowski", st, "flat two-dimensional model, line slice",
                        _box_sampler([-3.0], [3.0]))


def _make_powq_entry(name, p, note) -> CatalogEntry:
    beta, grad, beta_b, grad_b, bk = _powq_beta(p)
    st = StaticSpacetime(chart=_flat_chart(1, f"{name}-slice"),
                         beta_fn=beta, beta_grad_fn=grad, label=name,
                         beta_batch_fn=beta_b, beta_grad_batch_fn=grad_b,
                         beta_kernel=bk)
    return CatalogEntry(name, st, note, _box_sampler([-2.0], [2.0]))


def _make_ads_strip() -> CatalogEntry:
    half = math.pi / 4.0

    def metric(x):
        c = math.cos(x[0])
        return np.array([[1.0 / (c * c)]])

    def jac(x):
        c = math.cos(x[0])
        return np.array([[[2.0 * math.tan(x[0]) / (c * c)]]])

    def christoffel(x):
        return np.array([[[math.tan(x[0])]]])

    def metric_b(pts):
        c = np.cos(pts[:, 0])
        return (1.0 / (c * c))[:, None, None]

    def jac_b(pts):
        c = np.cos(pts[:, 0])
        return (2.0 * np.tan(pts[:, 0]) / (c * c))[:, None, None, None]

    chart = Chart(
        dim=1, label="ads-strip-slice",
        in_domain=lambda x: abs(x[0]) < half,
        metric_fn=metric, christoffel_fn=christoffel, metric_jacobian_fn=jac,
        metric_batch_fn=metric_b, metric_jacobian_batch_fn=jac_b,
        boundary_margin=lambda x: half - abs(x[0]),
        metric_kernel=MetricKernel(METRIC_CONF_SEC2),
        domain_kernel=DomainKernel(DOM_ABS0_LT, (half,)))

    def beta(x):
        c = math.cos(x[0])
        return 1.0 / (c * c)

    def grad(x):
        c = math.cos(x[0])
        return np.array([2.0 * math.tan(x[0]) / (c * c)])

    def beta_b(pts):
        c = np.cos(pts[:, 0])
        return 1.0 / (c * c)

    def grad_b(pts):
        c = np.cos(pts[:, 0])
        return (2.0 * np.tan(pts[:, 0]) / (c * c))[:, None]

    st = StaticSpacetime(chart=chart, beta_fn=beta, beta_grad_fn=grad,
                         label="ads_strip", beta_batch_fn=beta_b,
                         beta_grad_batch_fn=grad_b,
                         beta_kernel=BetaKernel(BETA_SEC2))
    return CatalogEntry(
        "ads_strip", st,
        "conformal strip |x| < pi/4 with dx^2/cos^2 x slice; incomplete slice, "
        "known failure case for two-point connection",
        _box_sampler([-0.7], [0.7]))


def _make_slit_plane() -> CatalogEntry:
    ax, ay = 1.0, 1.0

    def in_domain(x):
        return not (x[0] == ax and x[1] <= ay)

    def margin(x):
        # distance to the removed ray {x = ax, y <= ay}
        dx = x[0] - ax
        dy = max(0.0, x[1] - ay)
        return math.hypot(dx, dy)

    def segment(a, b):
        if (a[0] - ax) * (b[0] - ax) >= 0.0:
            return True
        t = (ax - a[0]) / (b[0] - a[0])
        return a[1] + t * (b[1] - a[1]) > ay

    beta, grad, beta_b, grad_b, bk = _const_beta(1.0)
    chart = _flat_chart(2, "slit-plane", in_domain=in_domain, margin=margin,
                        segment=segment,
                        domain_kernel=DomainKernel(DOM_SLIT, (ax, ay)))
    st = StaticSpacetime(chart=chart, beta_fn=beta, beta_grad_fn=grad,
                         label="slit_plane", beta_batch_fn=beta_b,
                         beta_grad_batch_fn=grad_b, beta_kernel=bk)
    return CatalogEntry(
        "slit_plane", st,
        "flat plane minus the downward ray {x=1, y<=1}; arrival infima exist "
        "but need not be attained",
        _box_sampler([-2.0, -2.0], [3.0, 3.0]))


def _make_schwarzschild(mass: float = 1.0) -> CatalogEntry:
    m = mass

    def metric(x):
        f = 1.0 - 2.0 * m / x[0]
        return np.diag([1.0 / f, x[0] * x[0]])

    def jac(x):
        r = x[0]
        f = 1.0 - 2.0 * m / r
        out = np.zeros((2, 2, 2))
        out[0, 0, 0] = -(2.0 * m / r**2) / f**2
        out[0, 1, 1] = 2.0 * r
        return out

    def christoffel(x):
        r = x[0]
        f = 1.0 - 2.0 * m / r
        out = np.zeros((2, 2, 2))
        out[0, 0, 0] = -(m / r**2) / f
        out[0, 1, 1] = -r * f
        out[1, 0, 1] = out[1, 1, 0] = 1.0 / r
        return out

    def metric_b(pts):
        r = pts[:, 0]
        f = 1.0 - 2.0 * m / r
        out = np.zeros((len(pts), 2, 2))
        out[:, 0, 0] = 1.0 / f
        out[:, 1, 1] = r * r
        return out

    def jac_b(pts):
        r = pts[:, 0]
        f = 1.0 - 2.0 * m / r
        out = np.zeros((len(pts), 2, 2, 2))
        out[:, 0, 0, 0] = -(2.0 * m / r**2) / f**2
        out[:, 0, 1, 1] = 2.0 * r
        return out

    chart = Chart(
        dim=2, label="schwarzschild-equatorial",
        in_domain=lambda x: x[0] > 2.0 * m,
        metric_fn=metric, christoffel_fn=christoffel, metric_jacobian_fn=jac,
        metric_batch_fn=metric_b, metric_jacobian_batch_fn=jac_b,
        boundary_margin=lambda x: x[0] - 2.0 * m,
        metric_kernel=MetricKernel(METRIC_SCHW_EQ, (m,)),
        domain_kernel=DomainKernel(DOM_COORD0_GT, (2.0 * m,)))

    def beta(x):
        return 1.0 - 2.0 * m / x[0]

    def grad(x):
        return np.array([2.0 * m / x[0] ** 2, 0.0])

    def beta_b(pts):
        return 1.0 - 2.0 * m / pts[:, 0]

    def grad_b(pts):
        out = np.zeros_like(np.asarray(pts, dtype=float))
        out[:, 0] = 2.0 * m / pts[:, 0] ** 2
        return out

    st = StaticSpacetime(chart=chart, beta_fn=beta, beta_grad_fn=grad,
                         label="schwarzschild_exterior", beta_batch_fn=beta_b,
                         beta_grad_batch_fn=grad_b,
                         beta_kernel=BetaKernel(BETA_SCHW, (m,)))

    def sample(rng, k):
        out = np.empty((k, 2))
        out[:, 0] = 4.0 + 5.0 * rng.random(k)
        out[:, 1] = 2.0 * math.pi * rng.random(k)
        return out

    return CatalogEntry(
        "schwarzschild_exterior", st,
        f"equatorial exterior patch (r, phi), r > {2*m:g}, lapse 1 - {2*m:g}/r",
        sample)


def _make_flat_disk() -> CatalogEntry:
    beta, grad, beta_b, grad_b, bk = _const_beta(1.0)
    chart = _flat_chart(2, "unit-disk", in_domain=lambda x: float(np.dot(x, x)) < 1.0,
                        margin=lambda x: 1.0 - math.sqrt(float(np.dot(x, x))),
                        domain_kernel=DomainKernel(DOM_BALL, (1.0,)))
    st = StaticSpacetime(chart=chart, beta_fn=beta, beta_grad_fn=grad,
                         label="flat_disk", beta_batch_fn=beta_b,
                         beta_grad_batch_fn=grad_b, beta_kernel=bk)

    def sample(rng, k):
        pts = rng.random((k, 2)) * 1.2 - 0.6
        r = np.sqrt(np.einsum("mi,mi->m", pts, pts))
        bad = r >= 0.85
        pts[bad] *= (0.5 / np.maximum(r[bad], 1e-9))[:, None]
        return pts

    return CatalogEntry("flat_disk", st,
                        "open unit disk with constant lapse; every probe exits",
                        sample)


_BUILDERS = {
    "minkowski": _make_minkowski,
    "quad_beta": lambda: _make_powq_entry(
        "quad_beta", 1.0, "flat line slice, lapse 1 + x^2 (critical growth)"),
    "superquad_beta": lambda: _make_powq_entry(
        "superquad_beta", 1.5,
        "flat line slice, lapse (1 + x^2)^1.5 (above-critical growth)"),
    "inv_beta_superquad": lambda: _make_powq_entry(
        "inv_beta_superquad", -1.5,
        "flat line slice, lapse (1 + x^2)^-1.5; reciprocal lapse grows "
        "above-critically, producing incomplete geodesics"),
    "ads_strip": _make_ads_strip,
    "slit_plane": _make_slit_plane,
    "schwarzschild_exterior": _make_schwarzschild,
    "flat_disk": _make_flat_disk,
}

_cache: dict[str, CatalogEntry] = {}


def _validate(entry: CatalogEntry) -> CatalogEntry:
    rng = np.random.default_rng(0)
    pts = entry.sample_positions(rng, 8)
    st = entry.spacetime
    for p in pts:
        if not st.chart.contains(p):
            raise ConfigError(f"catalog entry {entry.name}: sampler left the domain")
        st.chart.metric_at(p)         # symmetry / positivity
        if not st.beta_at(p) > 0.0:
            raise ConfigError(f"catalog entry {entry.name}: beta not positive")
    return entry


def get_entry(name: str) -> CatalogEntry:
    if name not in _BUILDERS:
        raise ConfigError(f"unknown spacetime {name!r}; see `staticgeo catalog`")
    if name not in _cache:
        _cache[name] = _validate(_BUILDERS[name]())
    return _cache[name]


def get_spacetime(name: str) -> StaticSpacetime:
    return get_entry(name).spacetime


def catalog_list() -> list[CatalogEntry]:
    return [get_entry(name) for name in sorted(_BUILDERS)]
