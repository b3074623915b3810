import numpy as np
import pytest

from mcflab.errors import SolverError
from mcflab.exact import grim_reaper, tilted_minimal
from mcflab.grid import DomainSpec, build_grid
from mcflab.metrics import make_metric
from mcflab.operators import ContactAngle
from mcflab.translator import (TranslatorSolver, continuation_solve,
                               fd_jacobian, solve_pinned, solve_regularized,
                               speed_quadrature, uniqueness_probe)


@pytest.fixture(scope="module")
def grim200():
    es = grim_reaper(1.0)
    g = build_grid(es.make_spec(200), make_metric("euclidean"))
    return es, g


def test_fd_jacobian_matches_dense_columns(grim200):
    """Colored assembly equals brute-force single-column differencing."""
    es, g = grim200
    rng = np.random.default_rng(7)
    v0 = 0.1 * np.sin(np.pi * g.axes[0])

    def res(v):
        from mcflab.operators import evaluate_rhs
        _, w, M, _ = evaluate_rhs(v, g, es.phi)
        return M - 1e-2 * v / w

    J = fd_jacobian(res, v0, g).toarray()
    delta = np.sqrt(np.finfo(float).eps) * (1.0 + np.max(np.abs(v0)))
    F0 = res(v0)
    for col in rng.choice(g.n_nodes, size=12, replace=False):
        e = np.zeros(g.shape)
        e[col] = delta
        col_fd = (res(v0 + e) - F0) / delta
        assert np.allclose(J[:, col], col_fd, atol=1e-4 * max(1, np.max(np.abs(col_fd))))


def test_regularized_speed_and_profile(grim200):
    es, g = grim200
    sol = solve_regularized(g, es.phi, 1e-3)
    assert sol.speed == pytest.approx(1.0, rel=1e-3)
    ex = es.u_on(g)
    ex -= np.sum(ex * g.dV) / np.sum(g.dV)
    assert np.max(np.abs(sol.u - ex)) < 1e-4


def test_eps_must_be_positive(grim200):
    es, g = grim200
    with pytest.raises(ValueError):
        solve_regularized(g, es.phi, 0.0)


def test_continuation_gaps_shrink(grim200):
    es, g = grim200
    # eps below ~1e-4 runs into the double-precision floor (mean u ~ C/eps),
    # so the decade schedule stops at 1e-4
    sol = continuation_solve(g, es.phi, eps_start=1e-2, n_eps=3, ratio=0.1,
                             polish=False)
    cs = [c for _, c in sol.eps_trace]
    gaps = np.abs(np.diff(cs))
    assert np.all(gaps[1:] <= gaps[:-1] / 3.0 + 1e-15)


def test_pinned_polish_improves_residual(grim200):
    es, g = grim200
    sol = continuation_solve(g, es.phi, n_eps=4)
    assert sol.mode == "pinned"
    assert sol.residual < 1e-9
    assert sol.speed == pytest.approx(1.0, rel=1e-3)


def test_speed_quadrature_routes_agree(grim200):
    es, g = grim200
    sol = continuation_solve(g, es.phi, n_eps=4)
    cq = speed_quadrature(sol.u, g, es.phi)
    assert cq == pytest.approx(sol.speed, rel=5e-3)


def test_zero_flux_gives_zero_speed():
    es = tilted_minimal(1.0)
    g = build_grid(es.make_spec(64), make_metric("euclidean"))
    # int Phi ds = 0 by cancellation, so both speed routes vanish
    assert speed_quadrature(es.u_on(g), g, es.phi) == pytest.approx(0.0, abs=1e-14)
    sol = continuation_solve(g, es.phi, n_eps=3)
    assert abs(sol.speed) < 1e-10


def test_uniqueness_probe_consistent(grim200):
    es, g = grim200
    speeds, spread, prof_spread = uniqueness_probe(g, es.phi, eps=1e-3)
    assert len(speeds) == 3
    assert spread < 1e-7
    assert prof_spread < 1e-7


def test_curved_ball_translator_dual_route():
    g = build_grid(DomainSpec.polar(2.0, 24, 32), make_metric("hyperbolic_polar"))
    phi = ContactAngle.constant(0.5)
    sol = continuation_solve(g, phi, n_eps=4)
    cq = speed_quadrature(sol.u, g, phi)
    assert cq == pytest.approx(sol.speed, rel=5e-3)
    assert sol.speed < 0.0   # positive Phi pushes the graph downward


def test_translator_solver_estimator_api(grim200):
    es, g = grim200
    ts = TranslatorSolver(n_eps=4)
    assert ts.get_params()["n_eps"] == 4
    ts.fit(g, es.phi)
    assert ts.speed_ == pytest.approx(1.0, rel=1e-3)
    assert ts.speed_quadrature_ == pytest.approx(ts.speed_, rel=5e-3)
    assert abs(np.sum(ts.u_ * g.dV)) < 1e-10


def test_solution_serialization_roundtrip(grim200):
    import json
    es, g = grim200
    sol = continuation_solve(g, es.phi, n_eps=3)
    doc = json.loads(json.dumps(sol.to_dict()))
    assert doc["mode"] == "pinned"
    assert doc["speed"] == sol.speed
