"""Invariant monitors and curvature-obstruction probes.

Monitors are pure functions of trajectories and grids: the parabolic maximum
principle for u_t, the surface-energy dissipation identity, the isoperimetric
(Cheeger) ratio, the mean-curvature obstruction inequality and the
gradient-bound envelope.  A RunReport bundles the verdicts with the sampled
series and serializes deterministically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .flow import Trajectory, surface_energy
from .grid import DomainGrid
from .operators import evaluate_rhs

UT_REL_TOL = 1e-6
UT_ABS_TOL = 1e-12
W_BLOWUP = 1e6


@dataclass(frozen=True)
class Verdict:
    """Outcome of one monitor: pass/fail with its worst margin."""

    name: str
    passed: bool
    margin: float                 # positive margin = slack, negative = violation
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "passed": bool(self.passed),
                "margin": float(self.margin), "detail": dict(self.detail)}


def monitor_ut_max(trajectory: Trajectory) -> Verdict:
    """Maximum principle for the speed: max|u_t| may never exceed its
    initial value (up to 1e-6 relative slack)."""
    s = np.asarray(trajectory.max_abs_ut, float)
    if len(s) < 2:
        raise ValueError("monitor needs at least 2 samples")
    bound = s[0] * (1.0 + UT_REL_TOL) + UT_ABS_TOL
    excess = s - bound
    worst = int(np.argmax(excess))
    passed = bool(excess[worst] <= 0.0)
    return Verdict("ut_max", passed, float(-excess[worst]),
                   detail={"t_worst": float(trajectory.t[worst]),
                           "initial": float(s[0]),
                           "worst": float(s[worst])})


def energy_identity_residual(trajectory: Trajectory, grid: DomainGrid, phi,
                             t_burn: float = 0.0):
    """Dissipation-identity residual series.

    R(t) = d/dt [ int w dV + int u Phi ds ] + int u_t^2 / w dV, evaluated at
    the interior samples with a centered time derivative.  Returns
    ``(times, abs_residual, K_R)`` where K_R = max|R| / (dt + h^2) is the
    calibrated envelope constant (dt = median sample spacing).

    Flows started from incompatible data (initial slope not matching the
    contact angle) carry a start-up layer whose residual scales like 1/h
    rather than h^2.  ``t_burn`` drops the samples with t < t[0] + t_burn
    from the envelope so K_R calibrates the asymptotic regime.
    """
    t = np.asarray(trajectory.t, float)
    if len(t) < 3:
        raise ValueError("need at least 3 samples for a centered d/dt")
    E = np.empty(len(t))
    D = np.empty(len(t))          # dissipation integral per sample
    for k, u in enumerate(trajectory.states):
        ut, w, _, _ = evaluate_rhs(u, grid, phi)
        E[k] = surface_energy(u, w, grid, phi)
        D[k] = grid.integrate_domain(ut**2 / w)
    dEdt = np.gradient(E, t)
    R = dEdt + D
    times = t[1:-1]
    absR = np.abs(R[1:-1])
    if t_burn > 0.0:
        keep = times >= times[0] + t_burn
        times, absR = times[keep], absR[keep]
    dt_s = float(np.median(np.diff(t)))
    h2 = min(grid.h) ** 2
    k_r = float(np.max(absR)) / (dt_s + h2) if len(absR) else 0.0
    return times, absR, k_r


def energy_identity_verdict(trajectory, grid, phi, k_r_budget) -> Verdict:
    """Pass iff max|R| stays below k_r_budget * (dt + h^2)."""
    times, absR, k_r = energy_identity_residual(trajectory, grid, phi)
    dt_s = float(np.median(np.diff(trajectory.t)))
    cap = k_r_budget * (dt_s + min(grid.h) ** 2)
    worst = float(np.max(absR)) if len(absR) else 0.0
    return Verdict("energy_identity", bool(worst <= cap), cap - worst,
                   detail={"max_residual": worst, "budget": cap,
                           "measured_k_r": k_r})


def cheeger_ratio(grid: DomainGrid) -> float:
    """Isoperimetric ratio Length(boundary) / Area(domain), metric quadrature."""
    if grid.dim != 2:
        raise ValueError("cheeger_ratio needs a 2D domain")
    length = grid.integrate_boundary(np.ones(len(grid.boundary_ds)))
    area = grid.integrate_domain(np.ones(grid.shape))
    return length / area


def inf_H_inequality(u, speed, grid: DomainGrid, phi=None) -> Verdict:
    """Obstruction inequality 2 inf H <= Length / Vol for a translator.

    On a translating profile 2H = C/w, so inf H = C / (2 max w); speeds of
    either sign are handled through |C| (w is even in u).
    """
    from .operators import compute_w, gradient, oblique_bc_closure
    if phi is not None:
        cl = oblique_bc_closure(u, grid, phi)
        w = compute_w(gradient(u, grid, cl.ghosts), grid)
    else:
        w = compute_w(gradient(u, grid), grid)
    two_inf_h = float(abs(speed)) / float(np.max(w))
    length = grid.integrate_boundary(np.ones(len(grid.boundary_ds)))
    vol = grid.integrate_domain(np.ones(grid.shape))
    ratio = length / vol
    passed = bool(two_inf_h <= ratio + 1e-8)
    return Verdict("inf_H_inequality", passed, float(ratio - two_inf_h),
                   detail={"two_inf_h": two_inf_h, "boundary_over_volume": ratio,
                           "max_w": float(np.max(w))})


def gradient_bound_monitor(trajectories) -> Verdict:
    """Exponential-in-oscillation envelope for the tilt factor.

    Accepts one trajectory or a sweep.  Per run: w_max and the observed
    oscillation M_T of u - u0.  Pass iff every w_max < 1e6 and, for a sweep,
    the affine fit of log w_max against M_T has nonnegative slope.
    """
    if isinstance(trajectories, Trajectory):
        trajectories = [trajectories]
    w_maxes, m_ts = [], []
    for traj in trajectories:
        w_maxes.append(float(np.max(traj.max_w)))
        u0 = traj.states[0]
        osc = max(float(np.ptp(u - u0)) for u in traj.states)
        m_ts.append(osc)
    finite_ok = all(w < W_BLOWUP for w in w_maxes)
    slope = 0.0
    if len(w_maxes) >= 2 and np.ptp(m_ts) > 0:
        slope = float(np.polyfit(m_ts, np.log(w_maxes), 1)[0])
    passed = bool(finite_ok and slope >= -1e-9)
    margin = min(W_BLOWUP - max(w_maxes), 1.0) if finite_ok else W_BLOWUP - max(w_maxes)
    return Verdict("gradient_bound", passed, margin if slope >= -1e-9 else slope,
                   detail={"w_max": w_maxes, "m_t": m_ts, "slope": slope})


@dataclass
class RunReport:
    """Monitor verdicts plus the sampled series for one flow run."""

    series: dict
    verdicts: dict
    fingerprint: str = ""

    @classmethod
    def from_trajectory(cls, trajectory: Trajectory, grid, phi,
                        k_r_budget=None, fingerprint=""):
        series = {
            "t": list(map(float, trajectory.t)),
            "max_abs_ut": list(map(float, trajectory.max_abs_ut)),
            "max_w": list(map(float, trajectory.max_w)),
            "energy": list(map(float, trajectory.energy)),
            "bc_residual": list(map(float, trajectory.bc_residual)),
            "mean_u": list(map(float, trajectory.mean_u)),
        }
        verdicts = {}
        v = monitor_ut_max(trajectory)
        verdicts[v.name] = v
        v = gradient_bound_monitor(trajectory)
        verdicts[v.name] = v
        if k_r_budget is not None and len(trajectory.t) >= 3:
            v = energy_identity_verdict(trajectory, grid, phi, k_r_budget)
            verdicts[v.name] = v
        return cls(series=series, verdicts=verdicts, fingerprint=fingerprint)

    @property
    def all_passed(self):
        return all(v.passed for v in self.verdicts.values())

    def to_dict(self):
        return {"fingerprint": self.fingerprint,
                "series": self.series,
                "verdicts": {k: v.to_dict() for k, v in sorted(self.verdicts.items())}}

    def to_table(self):
        """Fixed-format text table: monitor, PASS/FAIL, worst margin."""
        lines = ["monitor              status  margin"]
        for name in sorted(self.verdicts):
            v = self.verdicts[name]
            status = "PASS" if v.passed else "FAIL"
            lines.append(f"{name:<20} {status:<6}  {v.margin!r}")
        return "\n".join(lines) + "\n"
