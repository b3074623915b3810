"""Explicit time integration of u_t = w div(grad u / w) with the oblique BC.

Two-stage (Heun) stepping under a CFL restriction; trajectories carry the
per-step diagnostics used by the monitors, and the asymptotic translation
speed is estimated from the drift of the mean height.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .errors import BlowUpError, EstimationError
from .grid import DomainGrid
from .operators import ContactAngle, evaluate_rhs

W_BLOWUP_FLAG = 1e6


@dataclass(frozen=True)
class FlowParams:
    """Run controls for the parabolic solver."""

    t_end: float
    c_safe: float = 0.25
    sample_every: int = 50         # record cadence, in steps
    delta_stop: float = 1e-8       # translator stop: max|u_t - mean u_t| tolerance
    max_steps: int = 20_000_000
    w_refresh_every: int = 20      # steps between max-w refreshes in the CFL bound

    def __post_init__(self):
        if not self.t_end > 0.0:
            raise ValueError("t_end must be positive")
        if not 0.0 < self.c_safe <= 0.5:
            raise ValueError("c_safe must lie in (0, 0.5]")


@dataclass
class Trajectory:
    """Sampled flow history: scalar series plus height snapshots."""

    t: np.ndarray
    dt: np.ndarray
    mean_u: np.ndarray
    max_abs_ut: np.ndarray
    max_w: np.ndarray
    energy: np.ndarray
    bc_residual: np.ndarray
    states: list                    # u snapshot per sample
    reached_translator: bool
    completed: bool                 # False when max_steps hit first
    n_steps: int

    def final_u(self):
        return self.states[-1]


def boundary_phi_values(grid: DomainGrid, phi: ContactAngle, u):
    """Phi on the aggregated boundary node list (corner values averaged)."""
    vals = np.zeros(len(grid.boundary_flat_index))
    counts = np.zeros(len(vals))
    pos = {int(i): k for k, i in enumerate(grid.boundary_flat_index)}
    uflat = np.asarray(u, float).ravel()
    for face in grid.faces:
        if not face.physical:
            continue
        pv = phi.values(face, face.points, uflat[face.flat_index])
        for m, idx in enumerate(face.flat_index):
            k = pos[int(idx)]
            vals[k] += pv[m]
            counts[k] += 1.0
    np.divide(vals, counts, out=vals, where=counts > 0)
    return vals


def surface_energy(u, w, grid, phi):
    """E = integral of w dV + integral of u Phi ds (physical boundary).

    With the package's inward-normal sign convention the flow dissipates E:
    dE/dt = -integral of u_t^2 / w dV.
    """
    ub = np.asarray(u, float).ravel()[grid.boundary_flat_index]
    pv = boundary_phi_values(grid, phi, u)
    return grid.integrate_domain(w) + grid.integrate_boundary(ub * pv)


def cfl_dt(w_max, grid, c_safe=0.25):
    """Stable explicit step: c_safe * h_min^2 / (2 n Lambda max w)."""
    h_min = min(grid.h)
    lam = grid.spectral_bound()
    return c_safe * h_min**2 / (2.0 * grid.dim * lam * w_max)


def _check_finite(u, t, step):
    if not np.all(np.isfinite(u)):
        bad = int(np.count_nonzero(~np.isfinite(u)))
        raise BlowUpError(
            f"non-finite height field at t={t:.6g} (step {step})",
            dump={"t": t, "step": step, "bad_nodes": bad,
                  "max_finite": float(np.nanmax(np.abs(np.where(np.isfinite(u), u, np.nan))))})


def step(u, grid, phi, dt):
    """One Heun step; the BC closure is applied before each stage."""
    f1, w1, _, _ = evaluate_rhs(u, grid, phi)
    u_mid = u + dt * f1
    f2, _, _, _ = evaluate_rhs(u_mid, grid, phi)
    return u + 0.5 * dt * (f1 + f2)


def run_flow(u0, grid, phi, params: FlowParams):
    """Integrate to t_end or until the translator stop criterion fires.

    The stop criterion is spatial uniformity of u_t:
    max|u_t - mean u_t| < delta_stop * max(1, |mean u_t|).
    """
    u = np.array(u0, float, copy=True)
    if u.shape != grid.shape:
        raise ValueError(f"u0 shape {u.shape} != grid shape {grid.shape}")
    _check_finite(u, 0.0, 0)
    vol = float(np.sum(grid.dV))
    t = 0.0
    rec = {k: [] for k in ("t", "dt", "mean_u", "max_abs_ut", "max_w", "energy", "bc")}
    states = []
    reached = False
    completed = False
    w_max = None
    n = 0
    while n < params.max_steps:
        f1, w1, _, cl1 = evaluate_rhs(u, grid, phi)
        if w_max is None or n % params.w_refresh_every == 0:
            w_max = float(np.max(w1))
        dt = min(cfl_dt(w_max, grid, params.c_safe), params.t_end - t)
        sample = (n % params.sample_every == 0)
        mean_ut = float(np.sum(f1 * grid.dV)) / vol
        if sample:
            rec["t"].append(t)
            rec["dt"].append(dt)
            rec["mean_u"].append(float(np.sum(u * grid.dV)) / vol)
            rec["max_abs_ut"].append(float(np.max(np.abs(f1))))
            rec["max_w"].append(float(np.max(w1)))
            rec["energy"].append(surface_energy(u, w1, grid, phi))
            rec["bc"].append(cl1.residual)
            states.append(u.copy())
            dev = float(np.max(np.abs(f1 - mean_ut)))
            if dev < params.delta_stop * max(1.0, abs(mean_ut)):
                reached = True
                completed = True
                break
        u_mid = u + dt * f1
        f2, _, _, _ = evaluate_rhs(u_mid, grid, phi)
        u = u + 0.5 * dt * (f1 + f2)
        t += dt
        n += 1
        _check_finite(u, t, n)
        if t >= params.t_end - 1e-15 * params.t_end:
            completed = True
            break
    if not states or rec["t"][-1] < t:
        f1, w1, _, cl1 = evaluate_rhs(u, grid, phi)
        rec["t"].append(t)
        rec["dt"].append(dt if n else 0.0)
        rec["mean_u"].append(float(np.sum(u * grid.dV)) / vol)
        rec["max_abs_ut"].append(float(np.max(np.abs(f1))))
        rec["max_w"].append(float(np.max(w1)))
        rec["energy"].append(surface_energy(u, w1, grid, phi))
        rec["bc"].append(cl1.residual)
        states.append(u.copy())
        if not reached:
            mean_ut = float(np.sum(f1 * grid.dV)) / vol
            reached = float(np.max(np.abs(f1 - mean_ut))) < params.delta_stop * max(1.0, abs(mean_ut))
    return Trajectory(
        t=np.array(rec["t"]), dt=np.array(rec["dt"]), mean_u=np.array(rec["mean_u"]),
        max_abs_ut=np.array(rec["max_abs_ut"]), max_w=np.array(rec["max_w"]),
        energy=np.array(rec["energy"]), bc_residual=np.array(rec["bc"]),
        states=states, reached_translator=reached, completed=completed, n_steps=n)


def estimate_speed(trajectory: Trajectory):
    """Least-squares slope of mean u over the final third of the run."""
    t = trajectory.t
    if len(t) < 3:
        raise EstimationError("trajectory too short for a speed estimate")
    t_cut = t[0] + (t[-1] - t[0]) * 2.0 / 3.0
    sel = t >= t_cut
    if int(np.count_nonzero(sel)) < 2:
        raise EstimationError("fewer than 2 samples in the final third")
    ts, ms = t[sel], trajectory.mean_u[sel]
    slope = np.polyfit(ts - ts[0], ms, 1)[0]
    return float(slope)


class FlowIntegrator(BaseEstimator):
    """Estimator-style front end for the parabolic solver.

    Parameters mirror :class:`FlowParams`; after :meth:`fit` the instance
    exposes ``trajectory_``, ``speed_`` and ``final_u_``.
    """

    def __init__(self, t_end=1.0, c_safe=0.25, sample_every=50,
                 delta_stop=1e-8, max_steps=20_000_000):
        self.t_end = t_end
        self.c_safe = c_safe
        self.sample_every = sample_every
        self.delta_stop = delta_stop
        self.max_steps = max_steps

    def fit(self, grid, phi, u0=None):
        if u0 is None:
            u0 = np.zeros(grid.shape)
        params = FlowParams(t_end=self.t_end, c_safe=self.c_safe,
                            sample_every=self.sample_every,
                            delta_stop=self.delta_stop, max_steps=self.max_steps)
        self.trajectory_ = run_flow(u0, grid, phi, params)
        self.final_u_ = self.trajectory_.final_u()
        try:
            self.speed_ = estimate_speed(self.trajectory_)
        except EstimationError:
            self.speed_ = None
        return self
