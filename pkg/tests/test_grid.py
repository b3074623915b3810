import numpy as np
import pytest

from mcflab.errors import ConfigurationError
from mcflab.grid import DomainSpec, build_grid
from mcflab.metrics import make_metric


def test_interval_quadrature_exact_for_linear(euclid):
    g = build_grid(DomainSpec.interval(0.0, 2.0, 40), euclid)
    x = g.axes[0]
    assert g.integrate_domain(np.ones_like(x)) == pytest.approx(2.0, rel=1e-14)
    assert g.integrate_domain(x) == pytest.approx(2.0, rel=1e-13)
    # boundary "length" of an interval is the two-point counting measure
    assert g.integrate_boundary(np.ones(2)) == pytest.approx(2.0)


def test_rectangle_volume_and_perimeter(euclid):
    g = build_grid(DomainSpec.rectangle(0, 1, 0, 1, 16, 24), euclid)
    assert g.integrate_domain(np.ones(g.shape)) == pytest.approx(1.0, rel=1e-13)
    assert g.integrate_boundary(np.ones(len(g.boundary_ds))) == pytest.approx(4.0, rel=1e-13)


def test_hyperbolic_ball_length_and_area():
    R = 2.0
    g = build_grid(DomainSpec.polar(R, 64, 64), make_metric("hyperbolic_polar"))
    length = g.integrate_boundary(np.ones(len(g.boundary_ds)))
    area = g.integrate_domain(np.ones(g.shape))
    assert length == pytest.approx(2 * np.pi * np.sinh(R), rel=1e-12)
    # area misses the excised pole cap, which is O(r_lo^2)
    assert area == pytest.approx(2 * np.pi * (np.cosh(R) - 1), rel=2e-3)


def test_poincare_chart_ball_matches_geodesic_ball():
    R = 1.5
    r_chart = np.tanh(R / 2)
    g = build_grid(DomainSpec.polar(r_chart, 64, 64), make_metric("poincare_disk"))
    length = g.integrate_boundary(np.ones(len(g.boundary_ds)))
    assert length == pytest.approx(2 * np.pi * np.sinh(R), rel=1e-10)


def test_polar_disk_inner_ring_not_physical():
    g = build_grid(DomainSpec.polar(1.0, 16, 16), make_metric("euclidean"))
    names = {f.name: f.physical for f in g.faces}
    assert names["r_hi"] is True
    assert names["r_lo"] is False
    # non-physical ring contributes nothing to boundary quadrature
    full = g.integrate_boundary(np.ones(len(g.boundary_ds)))
    assert full == pytest.approx(2 * np.pi * 1.0, rel=1e-10)


def test_polar_annulus_both_rings_physical():
    g = build_grid(DomainSpec.polar(2.0, 16, 16, r_lo=1.0, inner="physical"),
                   make_metric("euclidean"))
    assert all(f.physical for f in g.faces)
    assert g.integrate_boundary(np.ones(len(g.boundary_ds))) == pytest.approx(
        2 * np.pi * 3.0, rel=1e-10)


def test_corner_normals_are_bisectors(euclid):
    g = build_grid(DomainSpec.rectangle(0, 1, 0, 1, 8, 8), euclid)
    corner = np.where((g.boundary_points[:, 0] == 0) & (g.boundary_points[:, 1] == 0))[0]
    assert len(corner) == 1
    gam = g.boundary_gamma[corner[0]]
    assert gam[0] == pytest.approx(gam[1])
    assert np.hypot(*gam) == pytest.approx(1.0)


def test_resolution_floor_enforced(euclid):
    with pytest.raises(ConfigurationError):
        build_grid(DomainSpec.interval(0, 1, 4), euclid)


def test_pole_touching_domain_rejected():
    with pytest.raises(ConfigurationError):
        build_grid(DomainSpec.polar(1.0, 16, 16, r_lo=1e-9),
                   make_metric("euclidean"))


def test_chart_singularity_wrapped_as_config_error():
    # disk chart only covers |x| < 1
    with pytest.raises(ConfigurationError):
        build_grid(DomainSpec.rectangle(0, 2, 0, 1, 8, 8),
                   make_metric("poincare_disk"))


def test_spectral_bound_euclidean_polar():
    g = build_grid(DomainSpec.polar(1.0, 16, 16, r_lo=0.5), make_metric("euclidean"))
    # sigma^tt = 1/r^2 peaks at r_lo
    assert g.spectral_bound() == pytest.approx(1.0 / 0.25, rel=1e-12)
