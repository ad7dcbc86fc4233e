"""Cubic Hermite interpolation and quadrature on sampled trajectories."""

from __future__ import annotations

import numpy as np


def hermite_eval(s: np.ndarray, x: np.ndarray, v: np.ndarray,
                 s_query: np.ndarray) -> np.ndarray:
    """Evaluate the piecewise-cubic Hermite interpolant of (x, v) samples.

    ``s`` must be strictly increasing; queries are clamped to its range.
    ``x`` and ``v`` have shape (m, n) (or (m,) for scalar series).
    """
    s = np.asarray(s, dtype=float)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    sq = np.clip(np.asarray(s_query, dtype=float), s[0], s[-1])
    idx = np.clip(np.searchsorted(s, sq, side="right") - 1, 0, len(s) - 2)
    h = s[idx + 1] - s[idx]
    u = np.where(h > 0, (sq - s[idx]) / np.where(h > 0, h, 1.0), 0.0)
    h00 = (1 + 2 * u) * (1 - u) ** 2
    h10 = u * (1 - u) ** 2
    h01 = u * u * (3 - 2 * u)
    h11 = u * u * (u - 1)
    if x.ndim == 1:
        return (h00 * x[idx] + h10 * h * v[idx]
                + h01 * x[idx + 1] + h11 * h * v[idx + 1])
    shp = (-1,) + (1,) * (x.ndim - 1)
    return (h00.reshape(shp) * x[idx] + (h10 * h).reshape(shp) * v[idx]
            + h01.reshape(shp) * x[idx + 1] + (h11 * h).reshape(shp) * v[idx + 1])


def cumquad_hermite(s: np.ndarray, f: np.ndarray, fp: np.ndarray) -> np.ndarray:
    """Cumulative integral of a sampled function with known derivatives.

    Integrates the cubic Hermite model on each interval, giving fourth-order
    accuracy on smooth integrands:
        int_0^h = h (f0 + f1)/2 + h^2 (fp0 - fp1)/12.
    """
    s = np.asarray(s, dtype=float)
    f = np.asarray(f, dtype=float)
    fp = np.asarray(fp, dtype=float)
    h = np.diff(s)
    inc = h * 0.5 * (f[:-1] + f[1:]) + h * h / 12.0 * (fp[:-1] - fp[1:])
    out = np.empty_like(f)
    out[0] = 0.0
    np.cumsum(inc, out=out[1:])
    return out
