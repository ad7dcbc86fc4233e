"""Limited-memory quasi-Newton descent with backtracking line search.

Kept in-house rather than delegated: the curve solvers need feasibility
filtering inside the line search (trial points outside the chart domain are
rejected, not evaluated), per-iteration monitoring hooks for divergence
certificates, and deterministic behavior across backends.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

ARMIJO_C1 = 1e-4
BACKTRACK = 0.5
MAX_BACKTRACKS = 60


class LaplacianPreconditioner:
    """Inverse of the 1-d path-graph Laplacian on interior curve nodes.

    Descent on discrete curve energies is badly scaled in the node basis
    (stiffness grows like the square of the node count); applying the
    inverse second-difference operator per coordinate restores mesh-
    independent step sizes.  Solved spectrally with a type-I discrete sine
    transform (the Laplacian's eigenbasis), O(N log N) per application.
    """

    def __init__(self, n_interior: int, dim: int, scale: float = 1.0):
        self.m = n_interior
        self.dim = dim
        p = n_interior + 1
        k = np.arange(1, p)
        self.eig = (2.0 - 2.0 * np.cos(np.pi * k / p)) / scale
        self.p = p

    def _dst(self, v):
        z = np.zeros((2 * self.p,) + v.shape[1:])
        z[1:self.p] = v
        z[self.p + 1:] = -v[::-1]
        return -np.fft.rfft(z, axis=0).imag[1:self.p] / 2.0

    def __call__(self, g: np.ndarray) -> np.ndarray:
        v = g.reshape(self.m, self.dim)
        u = self._dst(v)
        u /= self.eig[:, None]
        return (self._dst(u) * (2.0 / self.p)).reshape(g.shape)


@dataclass
class MinimizeResult:
    x: np.ndarray
    f: float
    grad_norm: float
    iterations: int
    converged: bool
    stop_reason: str   # converged | max_iter | callback | linesearch


def lbfgs(fg: Callable, x0: np.ndarray, *, gtol: float = 1e-8,
          max_iter: int = 500, memory: int = 10,
          feasible: Optional[Callable[[np.ndarray], bool]] = None,
          callback: Optional[Callable] = None,
          precond: Optional[Callable] = None,
          step_cap: Optional[Callable[[np.ndarray], float]] = None
          ) -> MinimizeResult:
    """Minimize ``f`` given a fused value-and-gradient callable.

    ``feasible`` guards the line search: infeasible trial points are
    backtracked past without evaluating ``fg``.  ``callback(it, x, f, g)``
    runs after every accepted iterate; returning False stops the run.
    ``precond`` maps gradients to well-scaled directions and seeds the
    quasi-Newton model in place of the identity.  ``step_cap(x)`` bounds
    the sup-norm of a single update (a trust region in all but name):
    descent may still travel arbitrarily far over many steps, but cannot
    jump there in one.
    """
    x = np.asarray(x0, dtype=float).copy()
    f, g = fg(x)
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    rho_hist: list[float] = []
    it = 0
    reason = "max_iter"
    converged = False

    while it < max_iter:
        gnorm = float(np.max(np.abs(g), initial=0.0))
        if gnorm <= gtol:
            converged = True
            reason = "converged"
            break

        d = _two_loop(g, s_hist, y_hist, rho_hist, precond)
        gtd = float(g @ d)
        if gtd >= 0.0:  # stale curvature; restart on steepest descent
            s_hist.clear(); y_hist.clear(); rho_hist.clear()
            d = -precond(g) if precond is not None else -g
            gtd = float(g @ d)
            if gtd >= 0.0:
                d = -g
                gtd = float(g @ d)

        alpha = 1.0
        if step_cap is not None:
            dnorm = float(np.max(np.abs(d), initial=0.0))
            cap = step_cap(x)
            if dnorm > cap > 0.0:
                alpha = cap / dnorm
        f_new = g_new = None
        for _ in range(MAX_BACKTRACKS):
            x_try = x + alpha * d
            if (feasible is None or feasible(x_try)) and np.all(np.isfinite(x_try)):
                f_try, g_try = fg(x_try)
                if np.isfinite(f_try) and f_try <= f + ARMIJO_C1 * alpha * gtd:
                    f_new, g_new = f_try, g_try
                    break
            alpha *= BACKTRACK
        if f_new is None:
            reason = "linesearch"
            break

        s = alpha * d
        ydiff = g_new - g
        sy = float(s @ ydiff)
        if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(ydiff)):
            s_hist.append(s)
            y_hist.append(ydiff)
            rho_hist.append(1.0 / sy)
            if len(s_hist) > memory:
                s_hist.pop(0); y_hist.pop(0); rho_hist.pop(0)

        x = x + s
        f, g = f_new, g_new
        it += 1
        if callback is not None and callback(it, x, f, g) is False:
            reason = "callback"
            break

    return MinimizeResult(x=x, f=f, grad_norm=float(np.max(np.abs(g), initial=0.0)),
                          iterations=it, converged=converged, stop_reason=reason)


def _two_loop(g, s_hist, y_hist, rho_hist, precond=None):
    q = -g.copy()
    if not s_hist:
        return precond(q) if precond is not None else q
    alphas = []
    for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    y_last = y_hist[-1]
    if precond is not None:
        pq = precond(q)
        gamma = float(s_hist[-1] @ y_last) / float(y_last @ precond(y_last))
        q = gamma * pq
    else:
        gamma = float(s_hist[-1] @ y_last) / float(y_last @ y_last)
        q = gamma * q
    for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return q
