import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from staticgeo.chart import (Chart, euclidean_chart, polar_chart,
                             schwarzschild_radial_chart)
from staticgeo.errors import DegenerateMetricError, OutOfDomainError


def test_euclidean_metric_identity():
    ch = euclidean_chart(2)
    assert np.allclose(ch.metric_at([3.0, -1.0]), np.eye(2))


def test_schwarzschild_radial_grr():
    ch = schwarzschild_radial_chart(mass=1.0)
    g = ch.metric_at([4.0])
    assert g[0, 0] == pytest.approx(1.0 / (1.0 - 2.0 / 4.0))  # = 2
    with pytest.raises(OutOfDomainError):
        ch.metric_at([1.5])


def test_polar_metric_and_christoffel():
    ch = polar_chart()
    assert np.allclose(ch.metric_at([2.0, 0.0]), np.diag([1.0, 4.0]))
    gam = ch.christoffel_at([2.0, 0.0])
    assert gam[0, 1, 1] == pytest.approx(-2.0)
    assert gam[1, 0, 1] == pytest.approx(0.5)
    assert gam[1, 1, 0] == pytest.approx(0.5)


def test_flat_christoffel_zero():
    ch = euclidean_chart(3)
    assert np.all(ch.christoffel_at([0.3, -4.0, 7.0]) == 0.0)


def test_fd_christoffel_matches_analytic_schwarzschild():
    analytic = schwarzschild_radial_chart(mass=1.0)
    fd = Chart(dim=1, label="schw-fd", in_domain=analytic.in_domain,
               metric_fn=analytic.metric_fn)
    x = [5.0]
    diff = np.max(np.abs(fd.christoffel_at(x) - analytic.christoffel_at(x)))
    assert diff < 1e-6


def test_fd_christoffel_matches_analytic_polar():
    analytic = polar_chart()
    fd = Chart(dim=2, label="polar-fd", in_domain=analytic.in_domain,
               metric_fn=analytic.metric_fn)
    for x in ([2.0, 0.3], [0.7, -1.2], [5.0, 2.0]):
        diff = np.max(np.abs(fd.christoffel_at(x) - analytic.christoffel_at(x)))
        assert diff < 1e-6


@settings(max_examples=40, deadline=None)
@given(r=hst.floats(0.1, 50.0), th=hst.floats(-6.0, 6.0))
def test_polar_metric_symmetric_positive(r, th):
    ch = polar_chart()
    g = ch.metric_at([r, th])
    assert np.max(np.abs(g - g.T)) < 1e-12
    assert np.all(np.linalg.eigvalsh(g) > 0.0)


@settings(max_examples=40, deadline=None)
@given(r=hst.floats(2.5, 40.0))
def test_fd_christoffel_lower_symmetry_exact(r):
    # FD fallback builds the symbols from a symmetric bracket, so lower-index
    # symmetry is exact, not approximate
    analytic = polar_chart()
    fd = Chart(dim=2, label="polar-fd", in_domain=analytic.in_domain,
               metric_fn=analytic.metric_fn)
    gam = fd.christoffel_at([r, 0.3])
    assert np.array_equal(gam, np.swapaxes(gam, 1, 2))


def test_metric_validation_rejects_asymmetric():
    ch = Chart(dim=2, label="bad", in_domain=lambda x: True,
               metric_fn=lambda x: np.array([[1.0, 0.5], [0.2, 1.0]]))
    with pytest.raises(DegenerateMetricError):
        ch.metric_at([0.0, 0.0])


def test_metric_validation_rejects_indefinite():
    ch = Chart(dim=2, label="bad", in_domain=lambda x: True,
               metric_fn=lambda x: np.diag([1.0, -1.0]))
    with pytest.raises(DegenerateMetricError):
        ch.metric_at([0.0, 0.0])


def test_out_of_domain_error_names_point():
    ch = schwarzschild_radial_chart()
    with pytest.raises(OutOfDomainError) as exc:
        ch.metric_at([1.0])
    assert "1.0" in str(exc.value)
