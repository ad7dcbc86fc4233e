"""Equivalence between geodesics and classical trajectories on the slice.

With the time constant of motion normalized to ``sqrt(2)``, the spatial
part of a geodesic solves the Newtonian system ``x'' = -grad V`` for the
potential ``V = -1/beta``, with total energy ``E = g_S(x',x')/2 + V(x)``
equal to half the conserved line element ``C``.  (Derivation: ``t' =
lambda / beta`` turns the geodesic force ``-(1/2) t'^2 grad beta`` into
``-(lambda^2/2) grad beta / beta^2 = -(lambda^2/2) grad V``, and ``E =
(C + lambda^2/beta)/2 - 1/beta = C/2`` once ``lambda^2 = 2``.)  The same
curves, reparameterized by arclength of the conformal metric
``(E - V) g_S``, are geodesics of that metric wherever ``E > V``.

Residuals in this module are measured against independent re-integrations
of the target system from matched initial data, not against the defining
algebra, so they quantify genuine agreement between the two flows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chart import Chart
from .errors import NearTurningPointError, NotReducibleError
from .interp import cumquad_hermite, hermite_eval
from .spacetime import (GeodesicState, GeodesicTrajectory, StaticSpacetime,
                        Termination, integrate_geodesic,
                        integrate_slice_geodesic)

SQRT2 = math.sqrt(2.0)
DEFAULT_JACOBI_FLOOR = 1e-3


@dataclass(frozen=True)
class ClassicalTrajectory:
    """Sampled solution of ``x'' = -grad V`` with ``V = -1/beta``."""

    spacetime: StaticSpacetime
    s: np.ndarray         # (m,) strictly increasing
    x: np.ndarray         # (m, n)
    v: np.ndarray         # (m, n)
    E: float

    @property
    def n_samples(self) -> int:
        return len(self.s)

    def potential(self, pts: np.ndarray) -> np.ndarray:
        return -1.0 / self.spacetime.beta_many(pts)

    def energy_series(self) -> np.ndarray:
        G = self.spacetime.chart.metric_many(self.x)
        kin = 0.5 * np.einsum("mi,mij,mj->m", self.v, G, self.v)
        return kin + self.potential(self.x)

    @property
    def samples(self):
        return [(float(self.s[i]), self.x[i].copy(), self.v[i].copy())
                for i in range(self.n_samples)]


@dataclass(frozen=True)
class ReductionReport:
    ode_residual: float       # sup |x - x_ref| vs independent classical run
    energy_drift: float       # max |E(s) - E|
    lambda_rescaled: float    # time constant after rescaling (= sqrt(2))


@dataclass(frozen=True)
class LiftReport:
    residual: float           # sup |(t,x) - reference geodesic|


@dataclass(frozen=True)
class JacobiReport:
    residual: float           # sup |x - reference conformal geodesic|
    arclength: float
    min_margin: float         # min (E - V) along the curve


def _classical_force(st: StaticSpacetime):
    # grad V = grad beta / beta^2 (coordinate partials; index raised inside)
    def force(x):
        b = float(st.beta_fn(x))
        return st.beta_grad_at(x) / (b * b)
    return force


def _integrate_classical(st: StaticSpacetime, x0, v0, s_max, tol):
    return integrate_slice_geodesic(st.chart, x0, v0, s_max, tol,
                                    force_grad=_classical_force(st))


def reduce_to_classical(traj: GeodesicTrajectory, tol: float = 1e-10
                        ) -> tuple[ClassicalTrajectory, ReductionReport]:
    """Rescale a geodesic to the normalized time constant and extract the
    classical trajectory, reporting how well it solves the potential system.

    The affine parameter is rescaled by ``lambda0 / sqrt(2)`` so the time
    constant becomes exactly ``sqrt(2)``; the energy is recomputed from the
    rescaled data.  The residual compares the rescaled curve pointwise with
    an independent integration of ``x'' = -grad V`` from the same initial
    data.
    """
    st = traj.spacetime
    lam0 = traj.lambda0
    if lam0 == 0.0:
        raise NotReducibleError(
            "time constant of motion vanishes; the curve is a slice geodesic "
            "at constant t and admits no potential-system reduction")
    a = lam0 / SQRT2
    sigma = a * traj.s
    x = traj.x.copy()
    v = traj.x_dot / a
    if a < 0.0:
        sigma = sigma[::-1].copy()
        x = x[::-1].copy()
        v = v[::-1].copy()

    G0 = st.chart.metric_at(x[0])
    E = float(0.5 * v[0] @ G0 @ v[0] - 1.0 / st.beta_at(x[0]))
    cl = ClassicalTrajectory(spacetime=st, s=sigma, x=x, v=v, E=E)

    energy_drift = float(np.max(np.abs(cl.energy_series() - E)))
    span = float(sigma[-1] - sigma[0])
    if span > 0.0:
        ref = _integrate_classical(st, x[0], v[0], span, tol)
        n = st.dim
        ref_x = hermite_eval(ref.s + sigma[0], ref.y[:, :n], ref.y[:, n:], sigma)
        m = min(len(ref_x), len(x))
        ode_residual = float(np.max(np.abs(ref_x[:m] - x[:m])))
    else:
        ode_residual = 0.0
    # the time constant rescales exactly under the affine change
    lam_rescaled = traj.lambda0 / a
    report = ReductionReport(ode_residual=ode_residual, energy_drift=energy_drift,
                             lambda_rescaled=float(lam_rescaled))
    return cl, report


def lift_classical(st: StaticSpacetime, cl: ClassicalTrajectory, t0: float = 0.0,
                   tol: float = 1e-10) -> tuple[GeodesicTrajectory, LiftReport]:
    """Assemble the geodesic over a classical trajectory.

    The time component is the quadrature ``t = t0 + sqrt(2) int ds / beta``
    evaluated with a cubic Hermite rule (the integrand's derivative along
    the curve is known analytically), and ``t' = sqrt(2)/beta`` exactly.
    The report compares the assembled curve against a direct geodesic
    integration from the lifted initial state.
    """
    b = st.beta_many(cl.x)
    db = st.beta_grad_many(cl.x)
    f = 1.0 / b
    fp = -np.einsum("mi,mi->m", db, cl.v) / (b * b)
    t = t0 + SQRT2 * cumquad_hermite(cl.s, f, fp)
    t_dot = SQRT2 / b

    lam = b * t_dot
    G = st.chart.metric_many(cl.x)
    q = np.einsum("mi,mij,mj->m", cl.v, G, cl.v)
    C = -b * t_dot**2 + q
    aux = b * t_dot**2 + q
    s_rel = cl.s - cl.s[0]
    traj = GeodesicTrajectory(
        spacetime=st, s=s_rel, t=t, x=cl.x.copy(), t_dot=t_dot,
        x_dot=cl.v.copy(), lam=lam, C=C, aux_norm_sq=aux,
        lambda0=float(lam[0]), C0=float(C[0]),
        termination=Termination("reached_s_max", None))

    span = float(s_rel[-1])
    if span > 0.0:
        init = GeodesicState(float(t[0]), cl.x[0], float(t_dot[0]), cl.v[0])
        ref = integrate_geodesic(st, init, span, tol)
        n = st.dim
        ref_t = hermite_eval(ref.s, ref.t, ref.t_dot, s_rel)
        ref_x = hermite_eval(ref.s, ref.x, ref.x_dot, s_rel)
        m = min(len(ref_t), len(t))
        residual = max(float(np.max(np.abs(ref_t[:m] - t[:m]))),
                       float(np.max(np.abs(ref_x[:m] - cl.x[:m]))))
    else:
        residual = 0.0
    return traj, LiftReport(residual=residual)


def jacobi_check(st: StaticSpacetime, cl: ClassicalTrajectory,
                 jacobi_floor: float = DEFAULT_JACOBI_FLOOR,
                 tol: float = 1e-10) -> JacobiReport:
    """Verify the classical curve is a pregeodesic of ``(E - V) g_S``.

    Reparameterizes the curve by arclength of the conformal metric and
    compares it pointwise with a direct geodesic integration of that metric
    from matched initial data.  Requires the energy margin ``E - V`` to stay
    above ``jacobi_floor`` along the whole curve.
    """
    b = st.beta_many(cl.x)
    margin = cl.E + 1.0 / b             # E - V with V = -1/beta
    min_margin = float(np.min(margin))
    if min_margin < jacobi_floor:
        raise NearTurningPointError(
            f"energy margin E - V dips to {min_margin:.3e} < floor "
            f"{jacobi_floor:.3e}; conformal-rescaling check not applicable")

    # arclength element sqrt(g_E(x',x')) = sqrt(2) (E - V) via the energy law
    db = st.beta_grad_many(cl.x)
    w = SQRT2 * margin
    wp = SQRT2 * (-np.einsum("mi,mi->m", db, cl.v) / (b * b))
    tau = cumquad_hermite(cl.s, w, wp)
    u0 = cl.v[0] / w[0]

    E = cl.E

    def phi_grad(x):
        bb = float(st.beta_fn(x))
        dV = st.beta_grad_at(x) / (bb * bb)
        return -0.5 * dV / (E + 1.0 / bb)

    span = float(tau[-1])
    if span <= 0.0:
        return JacobiReport(residual=0.0, arclength=0.0, min_margin=min_margin)
    ref = integrate_slice_geodesic(st.chart, cl.x[0], u0, span, tol,
                                   phi_grad=phi_grad)
    n = st.dim
    ref_x = hermite_eval(ref.s, ref.y[:, :n], ref.y[:, n:], tau)
    m = min(len(ref_x), len(tau))
    residual = float(np.max(np.abs(ref_x[:m] - cl.x[:m])))
    return JacobiReport(residual=residual, arclength=span, min_margin=min_margin)
