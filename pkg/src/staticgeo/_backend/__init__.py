"""Integrator backend selection.

At import time this package decides between the compiled extension
(``staticgeo._backend._core``) and the pure-Python driver.  Selection is
controlled by ``STATICGEO_BACKEND``:

* ``auto`` (default): compiled when importable, otherwise pure;
* ``pure``: never touch the extension;
* ``compiled``: require the extension, raise if missing.

Individual problems still fall back to the pure driver whenever their
geometry carries no kernel descriptors (arbitrary user charts), so both
paths are always semantically available.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..errors import StiffnessError
from . import pure
from .pure import (RawTrajectory, SliceOde, SpacetimeOde, TERM_BLOW_UP,
                   TERM_LEFT_DOMAIN, TERM_REACHED)

_MODE = os.environ.get("STATICGEO_BACKEND", "auto").strip().lower()
if _MODE not in ("auto", "pure", "compiled"):
    raise RuntimeError(f"STATICGEO_BACKEND must be auto|pure|compiled, got {_MODE!r}")

_core = None
if _MODE in ("auto", "compiled"):
    try:
        import importlib

        _core = importlib.import_module("._core", __name__)
    except ImportError:
        _core = None
        if _MODE == "compiled":
            raise RuntimeError(
                "STATICGEO_BACKEND=compiled but the extension is not built")


def backend_name() -> str:
    return "compiled" if _core is not None else "pure"


@dataclass(frozen=True)
class GeometrySpec:
    """Slice geometry handed to the integrator facade."""
    n: int
    metric: Callable
    christoffel: Callable
    in_domain: Callable
    segment: Optional[Callable] = None
    metric_kernel: object = None
    domain_kernel: object = None


@dataclass(frozen=True)
class BetaSpec:
    beta: Callable
    beta_grad: Callable
    beta_kernel: object = None


_TERM_CODES = {0: TERM_REACHED, 1: TERM_LEFT_DOMAIN, 2: TERM_BLOW_UP}


def _from_core(res) -> RawTrajectory:
    s_arr, y_arr, code, s_exit, n_acc, n_rej = res
    if code == 3:
        raise StiffnessError(
            f"step size underflow at s={float(s_arr[-1])!r}",
            trajectory=RawTrajectory(np.asarray(s_arr), np.asarray(y_arr),
                                     TERM_REACHED, None, n_acc, n_rej))
    if code == 4:
        raise StiffnessError(
            f"step budget exceeded after {n_acc} accepted steps",
            trajectory=RawTrajectory(np.asarray(s_arr), np.asarray(y_arr),
                                     TERM_REACHED, None, n_acc, n_rej))
    return RawTrajectory(np.asarray(s_arr), np.asarray(y_arr), _TERM_CODES[code],
                         None if s_exit != s_exit else float(s_exit),  # NaN -> None
                         n_acc, n_rej)


def _kernels_ok(geom: GeometrySpec, beta: Optional[BetaSpec]) -> bool:
    if _core is None or geom.n > 4:
        return False
    if geom.metric_kernel is None or geom.domain_kernel is None:
        return False
    if beta is not None and beta.beta_kernel is None:
        return False
    return True


def integrate_spacetime(geom: GeometrySpec, beta: BetaSpec, y0, s0, s_max,
                        rtol, atol, sign=-1.0, aux_sq_threshold=None,
                        max_steps=5_000_000,
                        max_step=float("inf")) -> RawTrajectory:
    """Integrate the warped-product geodesic system in state (t, x, t', x')."""
    if _kernels_ok(geom, beta):
        mk, dk, bk = geom.metric_kernel, geom.domain_kernel, beta.beta_kernel
        res = _core.integrate_spacetime_k(
            mk.kind, np.asarray(mk.params, float), bk.kind, np.asarray(bk.params, float),
            dk.kind, np.asarray(dk.params, float), geom.n, float(sign),
            np.asarray(y0, float), float(s0), float(s_max), float(rtol), float(atol),
            -1.0 if aux_sq_threshold is None else float(aux_sq_threshold),
            int(max_steps), float(max_step))
        return _from_core(res)
    ode = SpacetimeOde(geom.n, geom.metric, geom.christoffel, beta.beta,
                       beta.beta_grad, geom.in_domain, sign=sign,
                       segment=geom.segment, aux_sq_threshold=aux_sq_threshold)
    return pure.integrate(ode, y0, s0, s_max, rtol, atol, max_steps, max_step)


def integrate_slice(geom: GeometrySpec, y0, s0, s_max, rtol, atol,
                    phi_grad=None, force_grad=None, coord_guard=1e150,
                    conformal_inv_beta: Optional[BetaSpec] = None,
                    max_steps=5_000_000, max_step=float("inf")) -> RawTrajectory:
    """Integrate a slice geodesic; state (x, x').

    ``conformal_inv_beta`` selects the conformally rescaled metric
    ``g_S / beta`` (taking precedence over ``phi_grad``) and allows the
    compiled core to run the rescaled flow from kernel descriptors.
    """
    if conformal_inv_beta is not None and _kernels_ok(geom, conformal_inv_beta) \
            and force_grad is None:
        mk, dk = geom.metric_kernel, geom.domain_kernel
        bk = conformal_inv_beta.beta_kernel
        res = _core.integrate_slice_k(
            mk.kind, np.asarray(mk.params, float), dk.kind, np.asarray(dk.params, float),
            geom.n, np.asarray(y0, float), float(s0), float(s_max), float(rtol),
            float(atol), float(coord_guard), bk.kind, np.asarray(bk.params, float),
            int(max_steps), float(max_step))
        return _from_core(res)
    if conformal_inv_beta is None and force_grad is None and phi_grad is None \
            and _kernels_ok(geom, None):
        mk, dk = geom.metric_kernel, geom.domain_kernel
        res = _core.integrate_slice_k(
            mk.kind, np.asarray(mk.params, float), dk.kind, np.asarray(dk.params, float),
            geom.n, np.asarray(y0, float), float(s0), float(s_max), float(rtol),
            float(atol), float(coord_guard), -1, np.empty(0), int(max_steps),
            float(max_step))
        return _from_core(res)
    if conformal_inv_beta is not None:
        b, db = conformal_inv_beta.beta, conformal_inv_beta.beta_grad
        phi_grad = lambda x: -0.5 * db(x) / b(x)  # noqa: E731
    ode = SliceOde(geom.n, geom.metric, geom.christoffel, geom.in_domain,
                   phi_grad=phi_grad, force_grad=force_grad,
                   segment=geom.segment, coord_guard=coord_guard)
    return pure.integrate(ode, y0, s0, s_max, rtol, atol, max_steps, max_step)
