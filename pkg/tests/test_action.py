import math

import numpy as np
import pytest
import scipy.integrate as si

from staticgeo.action import (action_J, action_value_grad, grad_action_J,
                              lower_bound_gap, reconstruct_time)
from staticgeo.catalog import get_entry, get_spacetime
from staticgeo.chart import SliceCurve


def straight_curve(x0, x1, n_seg):
    x0 = np.atleast_1d(np.asarray(x0, float))
    x1 = np.atleast_1d(np.asarray(x1, float))
    s = np.linspace(0.0, 1.0, n_seg + 1)[:, None]
    return SliceCurve((1.0 - s) * x0[None, :] + s * x1[None, :])


def random_curve(rng, entry, n_seg=24, amp=0.5):
    x0, x1 = entry.sample_positions(rng, 2)
    nodes = straight_curve(x0, x1, n_seg).nodes.copy()
    s = np.linspace(0.0, 1.0, n_seg + 1)
    for k in range(1, 4):
        nodes += np.sin(math.pi * k * s)[:, None] \
            * rng.normal(size=nodes.shape[1])[None, :] * amp / k
    return SliceCurve(nodes)


def test_constant_lapse_closed_form():
    # kinetic 1/2 * 1, time term 4/2: J = 1/2 - 2 = -3/2
    st = get_spacetime("minkowski")
    ev = action_J(st, straight_curve([0.0], [1.0], 64), 2.0)
    assert ev.J == pytest.approx(-1.5, abs=1e-12)
    assert ev.kinetic == pytest.approx(0.5, abs=1e-12)
    assert ev.inv_beta_integral == pytest.approx(1.0, abs=1e-12)


def test_zero_time_gap_is_pure_kinetic():
    st = get_spacetime("quad_beta")
    curve = straight_curve([-0.5], [1.0], 32)
    ev = action_J(st, curve, 0.0)
    assert ev.J == ev.kinetic


def test_quadrature_oracle_quad_beta():
    """Midpoint-rule J against adaptive quadrature of the same integrals."""
    st = get_spacetime("quad_beta")
    curve = straight_curve([0.0], [1.0], 1000)
    ev = action_J(st, curve, 1.0)
    kin_exact = 0.5  # unit-speed straight segment on the flat line
    P_exact, _ = si.quad(lambda s: 1.0 / (1.0 + s * s), 0.0, 1.0)
    J_exact = kin_exact - 1.0 / (2.0 * P_exact)
    assert ev.J == pytest.approx(J_exact, abs=1e-4)
    assert ev.inv_beta_integral == pytest.approx(P_exact, abs=1e-6)


def test_gradient_matches_finite_differences(rng):
    """Analytic discrete gradient vs central differences of the discrete J."""
    h = 1e-6
    for name in ("quad_beta", "schwarzschild_exterior"):
        entry = get_entry(name)
        st = entry.spacetime
        for _ in range(5):
            curve = random_curve(rng, entry, n_seg=12, amp=0.3)
            if not all(st.chart.contains(p) for p in curve.nodes):
                continue
            delta_t = float(rng.uniform(-2.0, 2.0))
            grad = grad_action_J(st, curve, delta_t)
            for i in range(1, curve.n_segments):
                for k in range(st.dim):
                    nodes_p = curve.nodes.copy()
                    nodes_p[i, k] += h
                    nodes_m = curve.nodes.copy()
                    nodes_m[i, k] -= h
                    Jp = action_J(st, SliceCurve(nodes_p), delta_t).J
                    Jm = action_J(st, SliceCurve(nodes_m), delta_t).J
                    fd = (Jp - Jm) / (2.0 * h)
                    scale = max(1.0, abs(fd))
                    assert abs(grad[i - 1, k] - fd) / scale < 1e-5


def test_gradient_constant_lapse_is_discrete_laplacian(rng):
    # with constant lapse the time term has zero gradient and the kinetic
    # gradient is the (scaled) second-difference stencil of the nodes
    st = get_spacetime("minkowski")
    nodes = np.linspace(0.0, 1.0, 17)[:, None] ** 2
    curve = SliceCurve(nodes)
    grad = grad_action_J(st, curve, 3.0)
    n_seg = curve.n_segments
    lap = -(nodes[2:] - 2.0 * nodes[1:-1] + nodes[:-2]) * n_seg
    assert np.allclose(grad, lap, atol=1e-12)


def test_reconstruct_time_constant_lapse():
    st = get_spacetime("minkowski")
    curve = straight_curve([0.0], [1.0], 32)
    t, lam = reconstruct_time(st, curve, 2.0, t0=5.0)
    assert lam == pytest.approx(2.0, abs=1e-12)
    assert np.allclose(t, 5.0 + 2.0 * np.linspace(0.0, 1.0, 33), atol=1e-12)


def test_reconstruct_time_zero_gap():
    st = get_spacetime("quad_beta")
    curve = straight_curve([-1.0], [1.0], 32)
    t, lam = reconstruct_time(st, curve, 0.0, t0=-2.0)
    assert lam == 0.0
    assert np.all(t == -2.0)


def test_lower_bound_gap_cases(rng):
    st_const = get_spacetime("minkowski")
    curve = straight_curve([0.0], [1.0], 32)
    assert lower_bound_gap(st_const, curve, 2.0) == pytest.approx(0.0, abs=1e-12)

    st = get_spacetime("quad_beta")
    curve_q = random_curve(rng, get_entry("quad_beta"), n_seg=24)
    assert lower_bound_gap(st, curve_q, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert lower_bound_gap(st, curve_q, 1.5) > 0.0


def test_lower_bound_holds_over_random_curves(rng):
    """1000 random curves per lapse family: Cauchy-Schwarz slack stays
    nonnegative down to quadrature roundoff."""
    for name in ("quad_beta", "superquad_beta", "inv_beta_superquad",
                 "schwarzschild_exterior", "ads_strip"):
        entry = get_entry(name)
        st = entry.spacetime
        count = 0
        while count < 1000:
            curve = random_curve(rng, entry, n_seg=16, amp=0.25)
            if not all(st.chart.contains(p) for p in curve.nodes):
                continue
            delta_t = float(rng.uniform(-3.0, 3.0))
            try:
                gap = lower_bound_gap(st, curve, delta_t)
            except Exception:
                continue
            assert gap >= -1e-10
            count += 1
