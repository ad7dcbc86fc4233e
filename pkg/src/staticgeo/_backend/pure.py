"""Pure-Python adaptive integrator backend.

Implements an embedded Dormand-Prince 5(4) pair with the same stepping
logic, termination semantics and controller constants as the compiled
core, but driven by arbitrary Python evaluators.  This is both the
fallback when the extension is unavailable and the only path for charts
without kernel descriptors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..errors import StiffnessError

# Dormand-Prince 5(4) tableau
DP_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
DP_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
)
DP_B5 = (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0)
DP_B4 = (5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0,
         -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0)
# error coefficients: b5 - b4 (k7 enters with -1/40)
DP_E = tuple(b5 - b4 for b5, b4 in zip(DP_B5 + (0.0,), DP_B4))

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
STEP_UNDERFLOW = 1e-14

TERM_REACHED = "reached_s_max"
TERM_LEFT_DOMAIN = "left_domain"
TERM_BLOW_UP = "blow_up"


@dataclass
class RawTrajectory:
    s: np.ndarray          # (m,)
    y: np.ndarray          # (m, dim)
    termination: str
    s_exit: Optional[float]
    n_accepted: int
    n_rejected: int


ESCAPE_NORM = 1e8


class Ode:
    """Problem adapter consumed by the drivers of both backends."""

    def deriv(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def position_ok(self, y: np.ndarray) -> bool:
        raise NotImplementedError

    def segment_ok(self, y_from: np.ndarray, y_to: np.ndarray) -> bool:
        return True

    def blown_up(self, y: np.ndarray) -> bool:
        return False

    def position_velocity(self, y: np.ndarray):
        """(position, velocity) views used by the boundary probe."""
        raise NotImplementedError

    def near_boundary(self, y: np.ndarray, deltas=(1e-12, 1e-9, 1e-6)) -> bool:
        """Probe along the spatial flow for an imminent domain exit."""
        x, xd = self.position_velocity(y)
        vn = float(np.max(np.abs(xd), initial=0.0))
        if vn == 0.0:
            return False
        for d in deltas:
            xp = x + (d / vn) * xd
            if not self.position_of_ok(xp):
                return True
        return False

    def position_of_ok(self, x: np.ndarray) -> bool:
        raise NotImplementedError

    def escaping(self, y: np.ndarray) -> bool:
        """State norms consistent with a finite-parameter blow-up."""
        return bool(np.max(np.abs(y)) > ESCAPE_NORM)


def _error_norm(err, y0, y1, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    q = err / scale
    return float(np.sqrt(np.mean(q * q)))


def _initial_step(ode: Ode, y0, f0, s_span, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0 = float(np.sqrt(np.mean((y0 / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, s_span)
    y1 = y0 + h0 * f0
    if not ode.position_ok(y1) or not np.all(np.isfinite(y1)):
        return max(min(h0 * 1e-3, s_span), STEP_UNDERFLOW * 10)
    f1 = ode.deriv(y1)
    d2 = float(np.sqrt(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, s_span)


def integrate(ode: Ode, y0, s0: float, s_max: float, rtol: float, atol: float,
              max_steps: int = 5_000_000, max_step: float = np.inf
              ) -> RawTrajectory:
    """Adaptive 5(4) integration with domain and blow-up termination.

    Stage points and accepted states are required to satisfy the domain
    predicate; steps failing it shrink geometrically and, if the step size
    underflows against the boundary, the run terminates as a boundary exit.
    Underflow away from the boundary raises :class:`StiffnessError` with
    the partial trajectory attached.
    """
    y = np.asarray(y0, dtype=float).copy()
    if not ode.position_ok(y):
        raise ValueError("initial state outside the chart domain")
    s = float(s0)
    f = ode.deriv(y)
    ss = [s]
    ys = [y.copy()]
    n_acc = 0
    n_rej = 0
    h = min(_initial_step(ode, y, f, s_max - s, rtol, atol), max_step)
    k = [None] * 7
    domain_hit = False  # last rejection was a domain violation

    def _partial(term, s_exit):
        return RawTrajectory(np.array(ss), np.array(ys), term, s_exit, n_acc, n_rej)

    while s < s_max:
        if n_acc + n_rej > max_steps:
            raise StiffnessError(
                f"step budget exceeded after {n_acc} accepted steps",
                trajectory=_partial(TERM_REACHED, None))
        h = min(h, s_max - s)
        if h < STEP_UNDERFLOW * max(1.0, abs(s)):
            if domain_hit or ode.near_boundary(y):
                return _partial(TERM_LEFT_DOMAIN, s)
            if ode.escaping(y):
                return _partial(TERM_BLOW_UP, s)
            raise StiffnessError(
                f"step size underflow at s={s!r}", trajectory=_partial(TERM_REACHED, None))

        k[0] = f
        bad_stage = False
        for i in range(1, 6):
            yi = y + h * sum(a * k[j] for j, a in enumerate(DP_A[i]) if a != 0.0)
            if not ode.position_ok(yi):
                bad_stage = True
                break
            k[i] = ode.deriv(yi)
        if not bad_stage:
            y_new = y + h * (DP_B5[0] * k[0] + DP_B5[2] * k[2] + DP_B5[3] * k[3]
                             + DP_B5[4] * k[4] + DP_B5[5] * k[5])
            if not (ode.position_ok(y_new) and np.all(np.isfinite(y_new))):
                bad_stage = True
        if bad_stage:
            n_rej += 1
            domain_hit = True
            h *= 0.5
            continue

        k[6] = ode.deriv(y_new)
        err = h * (DP_E[0] * k[0] + DP_E[2] * k[2] + DP_E[3] * k[3]
                   + DP_E[4] * k[4] + DP_E[5] * k[5] + DP_E[6] * k[6])
        enorm = _error_norm(err, y, y_new, rtol, atol)
        if not np.isfinite(enorm) or enorm > 1.0:
            n_rej += 1
            domain_hit = False
            factor = MIN_FACTOR if not np.isfinite(enorm) else max(
                MIN_FACTOR, SAFETY * enorm ** -0.2)
            h *= factor
            continue

        crossed = not ode.segment_ok(y, y_new)
        s += h
        n_acc += 1
        domain_hit = False
        y = y_new
        f = k[6]
        ss.append(s)
        ys.append(y.copy())
        if crossed:
            return _partial(TERM_LEFT_DOMAIN, s)
        if ode.blown_up(y):
            return _partial(TERM_BLOW_UP, s)
        factor = MAX_FACTOR if enorm == 0.0 else min(
            MAX_FACTOR, max(MIN_FACTOR, SAFETY * enorm ** -0.2))
        h = min(h * factor, max_step)

    return _partial(TERM_REACHED, None)


# ---------------------------------------------------------------------------
# concrete right-hand sides


class SpacetimeOde(Ode):
    """Geodesic flow of ``sign * beta dt^2 + g_S`` in state (t, x, t', x').

    ``sign = -1`` gives the physical Lorentzian product metric; ``sign = +1``
    gives the auxiliary Riemannian metric obtained by flipping the sign of
    the time-time component.
    """

    def __init__(self, n, metric, christoffel, beta, beta_grad, in_domain,
                 sign=-1.0, segment=None, aux_sq_threshold=None):
        self.n = n
        self.metric = metric
        self.christoffel = christoffel
        self.beta = beta
        self.beta_grad = beta_grad
        self.in_domain = in_domain
        self.sign = float(sign)
        self.segment = segment
        self.aux_sq_threshold = aux_sq_threshold

    def deriv(self, y):
        n = self.n
        x = y[1:1 + n]
        td = y[1 + n]
        xd = y[2 + n:]
        G = self.metric(x)
        Gam = self.christoffel(x)
        b = self.beta(x)
        db = self.beta_grad(x)
        grad_up = np.linalg.solve(G, db)
        acc = -np.einsum("kij,i,j->k", Gam, xd, xd) + (self.sign * 0.5 * td * td) * grad_up
        tdd = 0.0 if td == 0.0 else -td * float(db @ xd) / b
        out = np.empty_like(y)
        out[0] = td
        out[1:1 + n] = xd
        out[1 + n] = tdd
        out[2 + n:] = acc
        return out

    def position_ok(self, y):
        return bool(self.in_domain(y[1:1 + self.n]))

    def position_of_ok(self, x):
        return bool(self.in_domain(x))

    def position_velocity(self, y):
        n = self.n
        return y[1:1 + n], y[2 + n:]

    def segment_ok(self, y_from, y_to):
        if self.segment is None:
            return True
        return bool(self.segment(y_from[1:1 + self.n], y_to[1:1 + self.n]))

    def aux_sq(self, y):
        n = self.n
        x = y[1:1 + n]
        td = y[1 + n]
        xd = y[2 + n:]
        G = self.metric(x)
        return self.beta(x) * td * td + float(xd @ G @ xd)

    def blown_up(self, y):
        if self.aux_sq_threshold is None:
            return False
        return self.aux_sq(y) > self.aux_sq_threshold


class SliceOde(Ode):
    """Geodesic flow on the slice, optionally with a conformal rescaling
    and/or a potential force; state is (x, x').

    ``phi_grad`` supplies the coordinate gradient of the log conformal
    factor (metric ``e^{2 phi} g_S``); ``force_grad`` supplies the
    coordinate gradient of a potential whose metric gradient is subtracted
    from the acceleration.
    """

    def __init__(self, n, metric, christoffel, in_domain, phi_grad=None,
                 force_grad=None, segment=None, coord_guard=1e150):
        self.n = n
        self.metric = metric
        self.christoffel = christoffel
        self.in_domain = in_domain
        self.phi_grad = phi_grad
        self.force_grad = force_grad
        self.segment = segment
        self.coord_guard = coord_guard

    def deriv(self, y):
        n = self.n
        x = y[:n]
        xd = y[n:]
        G = self.metric(x)
        Gam = self.christoffel(x)
        acc = -np.einsum("kij,i,j->k", Gam, xd, xd)
        if self.phi_grad is not None:
            dphi = self.phi_grad(x)
            acc += (-2.0 * float(dphi @ xd)) * xd \
                + float(xd @ G @ xd) * np.linalg.solve(G, dphi)
        if self.force_grad is not None:
            acc -= np.linalg.solve(G, self.force_grad(x))
        out = np.empty_like(y)
        out[:n] = xd
        out[n:] = acc
        return out

    def position_ok(self, y):
        return bool(self.in_domain(y[:self.n]))

    def position_of_ok(self, x):
        return bool(self.in_domain(x))

    def position_velocity(self, y):
        return y[:self.n], y[self.n:]

    def segment_ok(self, y_from, y_to):
        if self.segment is None:
            return True
        return bool(self.segment(y_from[:self.n], y_to[:self.n]))

    def blown_up(self, y):
        return bool(np.max(np.abs(y)) > self.coord_guard)
