"""Reference solutions: closed forms and high-resolution solves.

Closed-form graphs validate the discrete operator; the brute-force reference
solves the same scenario on a refined grid and Richardson-extrapolates the
speed.  References are cached to disk as JSON keyed by a scenario hash so
repeated test runs are cheap.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import OracleError
from .grid import DomainSpec, build_grid
from .operators import ContactAngle


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form translating (or minimal) graph with its matching data."""

    name: str
    u: Callable                 # height, per coordinate arrays
    grad: Callable              # chart gradient components
    w: Callable                 # tilt factor
    mcurv: Callable             # mean curvature operator value
    speed: float
    domain: DomainSpec
    phi: ContactAngle

    def make_spec(self, *n):
        """Domain spec at a chosen resolution (the stored one has n = 0)."""
        if self.domain.kind == "interval":
            return DomainSpec.interval(self.domain.bounds[0],
                                       self.domain.bounds[1], n[0])
        if self.domain.kind == "rectangle":
            return DomainSpec.rectangle(*self.domain.bounds, n[0], n[1])
        raise ValueError(f"unsupported domain kind {self.domain.kind!r}")

    def u_on(self, grid):
        coords = np.meshgrid(*grid.axes, indexing="ij")
        return np.asarray(self.u(*coords), float) * np.ones(grid.shape)

    def check_identities(self, points, tol=1e-12):
        """M[u] = C/w pointwise at sample coordinates."""
        pts = [np.asarray(p, float) for p in np.atleast_2d(points).T] \
            if np.ndim(points) > 1 else [np.asarray(points, float)]
        M = np.asarray(self.mcurv(*pts), float)
        w = np.asarray(self.w(*pts), float)
        err = float(np.max(np.abs(M - self.speed / w)))
        if err > tol:
            raise OracleError(f"{self.name}: M[u] - C/w = {err:.3e} exceeds {tol:g}")
        return err


def grim_reaper(a):
    """u = -log cos x on [-a, a]: unit-speed translator, Phi = -sin a."""
    a = float(a)
    if not 0.0 < a < np.pi / 2:
        raise ValueError("half-width must satisfy 0 < a < pi/2")
    return ExactSolution(
        name="grim_reaper",
        u=lambda x: -np.log(np.cos(x)),
        grad=lambda x: np.tan(x),
        w=lambda x: 1.0 / np.cos(x),
        mcurv=lambda x: np.cos(x),
        speed=1.0,
        domain=DomainSpec.interval(-a, a, 0),
        phi=ContactAngle.constant(-np.sin(a)))


def tilted_minimal(m, two_d=False):
    """u = m x: stationary minimal graph, Phi = +-m/sqrt(1+m^2), speed 0.

    The boundary integral of Phi cancels, so both speed routes return 0.
    With ``two_d`` the same profile lives on the unit square with Phi = 0 on
    the lateral (y) faces.
    """
    m = float(m)
    wv = float(np.sqrt(1.0 + m * m))
    phi_vals = {"x_lo": m / wv, "x_hi": -m / wv}
    if two_d:
        phi_vals.update({"y_lo": 0.0, "y_hi": 0.0})
        domain = DomainSpec.rectangle(0.0, 1.0, 0.0, 1.0, 0, 0)
        return ExactSolution(
            name="tilted_minimal_2d",
            u=lambda x, y: m * x,
            grad=lambda x, y: (m * np.ones_like(x), np.zeros_like(x)),
            w=lambda x, y: wv * np.ones_like(x),
            mcurv=lambda x, y: np.zeros_like(x),
            speed=0.0, domain=domain,
            phi=ContactAngle.per_segment(phi_vals, phi0=max(abs(m) / wv, 1e-3)))
    return ExactSolution(
        name="tilted_minimal",
        u=lambda x: m * x,
        grad=lambda x: m * np.ones_like(x),
        w=lambda x: wv * np.ones_like(x),
        mcurv=lambda x: np.zeros_like(x),
        speed=0.0,
        domain=DomainSpec.interval(-1.0, 1.0, 0),
        phi=ContactAngle.per_segment(phi_vals, phi0=max(abs(m) / wv, 1e-3)))


# -- high-resolution reference ------------------------------------------------


def _scenario_key(descriptor):
    blob = json.dumps(descriptor, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _atomic_write_json(path, payload):
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh, sort_keys=True)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _refined_spec(spec: DomainSpec, k, base_grid):
    n = tuple(int(v * k) for v in spec.n)
    if spec.kind == "interval":
        return DomainSpec.interval(spec.bounds[0], spec.bounds[1], n[0])
    if spec.kind == "rectangle":
        return DomainSpec.rectangle(*spec.bounds, n[0], n[1])
    # polar: pin r_lo so coarse nodes embed in the fine node set
    r_lo = float(base_grid.axes[0][0])
    return DomainSpec.polar(spec.bounds[1], n[0], n[1], r_lo=r_lo,
                            inner=spec.inner)


def _inject(u_fine, k, grid_coarse):
    sl = tuple(slice(None, None, k) for _ in grid_coarse.shape)
    out = u_fine[sl]
    if out.shape != grid_coarse.shape:
        raise OracleError(f"injection shape {out.shape} != {grid_coarse.shape}")
    return out


def highres_reference(spec: DomainSpec, metric, phi, k=4, eps_start=1e-2,
                      n_eps=4, tol=1e-11, cache_dir=None, descriptor=None):
    """Reference translator: solves at k/2x and kx, Richardson-extrapolates C.

    Returns a dict with ``c_ref``, ``c_err`` (Richardson error estimate),
    ``u_coarse`` (fine profile injected onto the requested grid) and the two
    raw speeds.  Any failure raises :class:`OracleError` so reference
    problems are distinguishable from solver defects under test.
    """
    from .translator import continuation_solve
    if k < 2 or k % 2:
        raise ValueError("refinement factor must be an even integer >= 2")
    grid_c = build_grid(spec, metric)
    if descriptor is not None and cache_dir is not None:
        key = _scenario_key({"scenario": descriptor, "k": k,
                             "eps_start": eps_start, "n_eps": n_eps})
        path = os.path.join(cache_dir, f"reference_{key}.json")
        if os.path.exists(path):
            with open(path) as fh:
                data = json.load(fh)
            data["u_coarse"] = np.array(data["u_coarse"]).reshape(grid_c.shape)
            return data
    else:
        path = None
    speeds = {}
    u_inj = None
    try:
        for kk in (k // 2, k):
            grid_f = build_grid(_refined_spec(spec, kk, grid_c), metric)
            sol = continuation_solve(grid_f, phi, eps_start=eps_start,
                                     n_eps=n_eps, tol=tol)
            speeds[kk] = sol.speed
            if kk == k:
                u_inj = _inject(sol.u, kk, grid_c)
    except OracleError:
        raise
    except Exception as exc:
        raise OracleError(f"reference solve failed at factor {kk}: {exc}") from exc
    c_half, c_full = speeds[k // 2], speeds[k]
    c_ref = (4.0 * c_full - c_half) / 3.0
    c_err = abs(c_full - c_half) / 3.0
    result = {"c_ref": float(c_ref), "c_err": float(c_err),
              "c_half": float(c_half), "c_full": float(c_full),
              "factor": int(k), "u_coarse": u_inj}
    if path is not None:
        payload = dict(result)
        payload["u_coarse"] = [float(v) for v in u_inj.ravel()]
        _atomic_write_json(path, payload)
    return result
