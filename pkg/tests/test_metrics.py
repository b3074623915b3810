import numpy as np
import pytest

from mcflab.metrics import ChartDomainError, MetricField, make_metric, metric_at


def test_euclidean_components_all_charts():
    m = make_metric("euclidean")
    (s,) = m.diag("interval", (np.array([0.3]),))
    assert s == 1.0
    sx, sy = m.diag("cartesian", (np.array([0.1]), np.array([0.2])))
    assert sx == 1.0 and sy == 1.0
    sr, st = m.diag("polar", (np.array([2.0]), np.array([0.5])))
    assert sr == 1.0 and st == 4.0


def test_poincare_disk_matches_closed_form():
    m = make_metric("poincare_disk")
    x, y = np.array([0.3]), np.array([0.4])
    s, _ = m.diag("cartesian", (x, y))
    lam = 2.0 / (1.0 - 0.25)
    assert s[0] == pytest.approx(lam**2, rel=1e-14)
    K = m.gauss_curvature("cartesian", (x, y))
    assert K[0] == pytest.approx(-1.0, abs=1e-12)


def test_poincare_disk_rejects_exterior():
    m = make_metric("poincare_disk")
    with pytest.raises(ChartDomainError):
        m.diag("cartesian", (np.array([1.1]), np.array([0.0])))


def test_halfplane_curvature_and_domain():
    m = make_metric("hyperbolic_halfplane")
    K = m.gauss_curvature("cartesian", (np.array([5.0]), np.array([0.2])))
    assert K[0] == pytest.approx(-1.0, abs=1e-12)
    with pytest.raises(ChartDomainError):
        m.diag("cartesian", (np.array([0.0]), np.array([-0.1])))


def test_rot_symmetric_curvatures():
    sph = make_metric("sphere")
    hyp = make_metric("hyperbolic_polar")
    r = np.array([0.7])
    assert sph.gauss_curvature("polar", (r, np.array([0.0])))[0] == pytest.approx(1.0)
    assert hyp.gauss_curvature("polar", (r, np.array([0.0])))[0] == pytest.approx(-1.0)


def test_rot_symmetric_pole_is_rejected():
    m = make_metric("hyperbolic_polar")
    with pytest.raises(ChartDomainError):
        m.diag("polar", (np.array([0.0]), np.array([0.0])))


def test_conformal_on_polar_chart_consistent():
    """The same conformal metric evaluated through both charts agrees."""
    m = make_metric("poincare_disk")
    r, th = 0.5, 1.2
    x, y = r * np.cos(th), r * np.sin(th)
    s_cart, _ = m.diag("cartesian", (np.array([x]), np.array([y])))
    s_rr, s_tt = m.diag("polar", (np.array([r]), np.array([th])))
    assert s_rr[0] == pytest.approx(s_cart[0], rel=1e-14)
    assert s_tt[0] == pytest.approx(s_cart[0] * r**2, rel=1e-14)


def test_conformal_poly_curvature():
    # lam = x^2 + y^2 -> Lap lam = 4, K = -4 e^{-2 lam}
    coeffs = [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]
    m = make_metric("conformal_poly", coeffs=coeffs)
    x, y = np.array([0.3]), np.array([-0.2])
    K = m.gauss_curvature("cartesian", (x, y))
    lam = 0.3**2 + 0.2**2
    assert K[0] == pytest.approx(-4.0 * np.exp(-2 * lam), rel=1e-12)


def test_rot_poly_warp():
    m = make_metric("rot_poly", coeffs=[0.0, 1.0, 0.0, 0.5])
    r = np.array([0.6])
    _, s_tt = m.diag("polar", (r, np.array([0.0])))
    f = 0.6 + 0.5 * 0.6**3
    assert s_tt[0] == pytest.approx(f**2, rel=1e-14)
    # K = -f''/f with f'' = 3 r
    K = m.gauss_curvature("polar", (r, np.array([0.0])))
    assert K[0] == pytest.approx(-3.0 * 0.6 / f, rel=1e-12)


def test_metric_at_point_api():
    sig, inv, sdet, K = metric_at(make_metric("sphere"), (0.5, 0.1), chart="polar")
    assert sig.shape == (2, 2)
    assert sig[1, 1] == pytest.approx(np.sin(0.5) ** 2)
    assert inv[1, 1] == pytest.approx(1.0 / np.sin(0.5) ** 2)
    assert sdet == pytest.approx(np.sin(0.5))
    assert K == pytest.approx(1.0)


def test_unknown_names_rejected():
    with pytest.raises(ValueError):
        make_metric("schwarzschild")
    with pytest.raises(ValueError):
        MetricField("conformal")
