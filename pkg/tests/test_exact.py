import numpy as np
import pytest

from mcflab.errors import OracleError
from mcflab.exact import (ExactSolution, grim_reaper, highres_reference,
                          tilted_minimal)
from mcflab.grid import DomainSpec, build_grid
from mcflab.metrics import make_metric
from mcflab.operators import ContactAngle


class TestGrimReaper:
    def test_closed_form_values(self):
        es = grim_reaper(1.0)
        assert es.u(0.5) == pytest.approx(-np.log(np.cos(0.5)), rel=1e-14)
        assert es.u(0.5) == pytest.approx(0.130584, abs=1e-6)
        face_phi = es.phi.segments[None](np.zeros((1, 1)), None)
        assert face_phi[0] == pytest.approx(-np.sin(1.0), rel=1e-14)

    def test_speed_is_domain_independent(self):
        for a in (0.01, 0.5, 1.2):
            assert grim_reaper(a).speed == 1.0

    def test_defining_identity_at_samples(self):
        es = grim_reaper(1.0)
        x = np.linspace(-1.0, 1.0, 50)
        assert es.check_identities(x) < 1e-12

    def test_halfwidth_domain_errors(self):
        for a in (0.0, np.pi / 2, 2.0):
            with pytest.raises(ValueError):
                grim_reaper(a)


class TestTiltedMinimal:
    def test_zero_slope_trivial(self):
        es = tilted_minimal(0.0)
        x = np.linspace(-1, 1, 10)
        assert np.all(es.u(x) == 0.0)
        assert es.speed == 0.0

    def test_unit_slope_contact_angles(self):
        es = tilted_minimal(1.0)
        g = build_grid(es.make_spec(16), make_metric("euclidean"))
        vals = {}
        for face in g.faces:
            vals[face.name] = es.phi.values(face, face.points, np.zeros(1))[0]
        assert vals["x_hi"] == pytest.approx(-0.70711, abs=1e-5)
        assert vals["x_lo"] == pytest.approx(+0.70711, abs=1e-5)

    def test_boundary_flux_cancels(self):
        es = tilted_minimal(0.8)
        g = build_grid(es.make_spec(32), make_metric("euclidean"))
        from mcflab.flow import boundary_phi_values
        pv = boundary_phi_values(g, es.phi, es.u_on(g))
        assert g.integrate_boundary(pv) == pytest.approx(0.0, abs=1e-15)

    def test_2d_variant_lateral_faces_flat(self):
        es = tilted_minimal(0.5, two_d=True)
        g = build_grid(es.make_spec(8, 8), make_metric("euclidean"))
        for face in g.faces:
            vals = es.phi.values(face, face.points, np.zeros(len(face.points)))
            if face.name.startswith("y"):
                assert np.all(vals == 0.0)


class TestHighresReference:
    def test_grim_reaper_reference(self, tmp_path):
        es = grim_reaper(1.0)
        spec = DomainSpec.interval(-1, 1, 100)
        ref = highres_reference(spec, make_metric("euclidean"), es.phi, k=4,
                                n_eps=3, cache_dir=str(tmp_path),
                                descriptor={"case": "grim", "n": 100})
        assert ref["c_ref"] == pytest.approx(1.0, abs=1e-6)
        assert ref["c_err"] < 1e-5
        assert ref["u_coarse"].shape == (101,)

    def test_cache_hit_is_bitwise(self, tmp_path):
        es = grim_reaper(1.0)
        spec = DomainSpec.interval(-1, 1, 100)
        kw = dict(k=4, n_eps=3, cache_dir=str(tmp_path),
                  descriptor={"case": "grim", "n": 100})
        a = highres_reference(spec, make_metric("euclidean"), es.phi, **kw)
        b = highres_reference(spec, make_metric("euclidean"), es.phi, **kw)
        assert a["c_ref"] == b["c_ref"]
        assert np.array_equal(a["u_coarse"], b["u_coarse"])

    def test_zero_flux_reference_is_zero(self):
        es = tilted_minimal(1.0)
        spec = DomainSpec.interval(-1, 1, 64)
        ref = highres_reference(spec, make_metric("euclidean"), es.phi,
                                k=2, n_eps=3)
        assert abs(ref["c_ref"]) < 1e-10

    def test_bad_refinement_factor(self):
        es = grim_reaper(1.0)
        with pytest.raises(ValueError):
            highres_reference(DomainSpec.interval(-1, 1, 64),
                              make_metric("euclidean"), es.phi, k=3)

    def test_failure_is_oracle_error(self):
        # a contact angle violating its own cap fails during the reference
        # solve; that must surface as infrastructure, not as a silent value
        phi = ContactAngle.constant(-0.5, phi0=0.3)
        with pytest.raises(OracleError):
            highres_reference(DomainSpec.interval(-1, 1, 16),
                              make_metric("euclidean"), phi, k=2, n_eps=2)
