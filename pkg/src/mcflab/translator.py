"""Direct computation of translating profiles.

Solves the regularized elliptic problem div(grad u / w) = eps * u / w with the
oblique boundary condition, drives eps -> 0 by continuation with warm starts,
and extrapolates the speed C = lim eps * mean(u).  A final "pinned" solve with
(profile, C) as unknowns polishes the answer.  Jacobians are assembled by
finite differences over a node coloring, so the full nonlinear stencil
(including tangential boundary terms) is differentiated without hand coding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve
from sklearn.base import BaseEstimator

from .errors import SolverError
from .grid import DomainGrid
from .operators import ContactAngle, compute_w, evaluate_rhs, gradient, oblique_bc_closure
from .flow import boundary_phi_values

# widest one-sided stencil reach of the discrete operator (boundary closures)
_REACH_OPEN = 4
_REACH_PERIODIC = 2


def _color_strides(grid: DomainGrid):
    strides = []
    for k, n in enumerate(grid.shape):
        if grid.periodic[k]:
            s = next((d for d in range(2 * _REACH_PERIODIC + 1, n + 1) if n % d == 0), n)
        else:
            s = min(2 * _REACH_OPEN + 1, n)
        strides.append(s)
    return strides


def _column_map(n, stride, offset, periodic, reach):
    """Per row index, the unique perturbed column within the stencil reach.

    Returns -1 where no column of this color can influence the row.
    """
    r = np.arange(n)
    d = (r - offset) % stride
    if periodic:
        c = np.where(d <= reach, (r - d) % n,
                     np.where(stride - d <= reach, (r - d + stride) % n, -1))
        return c
    c_lo = r - d
    c_hi = c_lo + stride
    c = np.full(n, -1)
    ok_lo = (d <= reach) & (c_lo >= 0)
    ok_hi = (stride - d <= reach) & (c_hi <= n - 1)
    c[ok_hi] = c_hi[ok_hi]
    c[ok_lo] = c_lo[ok_lo]     # prefer the nearer (lower) candidate
    return c


def fd_jacobian(res_fun, v0, grid: DomainGrid, delta=None):
    """Sparse Jacobian of a nodal residual by colored finite differences."""
    v0 = np.asarray(v0, float)
    if delta is None:
        delta = np.sqrt(np.finfo(float).eps) * (1.0 + float(np.max(np.abs(v0))))
    F0 = res_fun(v0)
    strides = _color_strides(grid)
    reaches = [_REACH_PERIODIC if p else _REACH_OPEN for p in grid.periodic]
    rows, cols, data = [], [], []
    flat = np.arange(grid.n_nodes).reshape(grid.shape)
    for offsets in np.ndindex(*strides):
        mask = np.zeros(grid.shape, bool)
        mask[tuple(slice(o, None, s) for o, s in zip(offsets, strides))] = True
        dF = (res_fun(v0 + delta * mask) - F0) / delta
        cmaps = [_column_map(n, s, o, p, rc)
                 for n, s, o, p, rc in zip(grid.shape, strides, offsets,
                                           grid.periodic, reaches)]
        if grid.dim == 1:
            cflat = cmaps[0]
            valid = cflat >= 0
        else:
            c0 = cmaps[0][:, None]
            c1 = cmaps[1][None, :]
            valid = (c0 >= 0) & (c1 >= 0)
            cflat = np.where(valid, c0 * grid.shape[1] + c1, -1)
        hit = valid & (dF != 0.0)
        rows.append(flat[hit])
        cols.append(cflat[hit] if grid.dim > 1 else cmaps[0][hit])
        data.append(dF[hit])
    n = grid.n_nodes
    return sp.csr_matrix((np.concatenate(data),
                          (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n, n))


@dataclass
class TranslatorSolution:
    """Mean-zero translating profile with its speed and solve diagnostics."""

    u: np.ndarray                  # profile, volume-weighted mean zero
    speed: float
    mode: str                      # "regularized" or "pinned"
    eps: float | None
    residual: float
    n_iter: int
    eps_trace: list = field(default_factory=list)   # (eps, C_eps) pairs
    bc_residual: float = 0.0
    max_w: float = 0.0

    def to_dict(self):
        return {
            "speed": self.speed,
            "mode": self.mode,
            "eps": self.eps,
            "residual": self.residual,
            "n_iter": self.n_iter,
            "eps_trace": [[e, c] for e, c in self.eps_trace],
            "bc_residual": self.bc_residual,
            "max_w": self.max_w,
        }


def _volmean(f, grid):
    return float(np.sum(f * grid.dV)) / float(np.sum(grid.dV))


class _NewtonProblem:
    """Bordered system F(v, s) = 0, constraint mean(v) = 0.

    * regularized mode: u = v + s,  F = M[u] - eps * u / w   (s is the mean)
    * pinned mode:      u = v,      F = M[u] - s / w          (s is the speed)
    """

    def __init__(self, grid, phi, mode, eps=None):
        self.grid = grid
        self.phi = phi
        self.mode = mode
        self.eps = eps

    def residual(self, v, s):
        if self.mode == "regularized":
            u = v + s
            _, w, M, cl = evaluate_rhs(u, self.grid, self.phi)
            return M - self.eps * u / w, cl, w
        _, w, M, cl = evaluate_rhs(v, self.grid, self.phi)
        return M - s / w, cl, w

    def res_flat(self, v, s):
        return self.residual(v, s)[0]


def _relax(problem: _NewtonProblem, v, s, cw, n_sweeps=300, c_safe=0.2):
    """Pseudo-time smoothing: explicit steps of u_t = w * residual.

    Used when a Newton step overshoots into a steep (large w) state; the
    parabolic relaxation dissipates the rough features and returns an
    iterate inside Newton's basin.
    """
    from .flow import cfl_dt
    grid = problem.grid
    for _ in range(n_sweeps):
        F, _, w = problem.residual(v, s)
        dt = cfl_dt(float(np.max(w)), grid, c_safe)
        if problem.mode == "regularized":
            u = v + s + dt * w * F
            s = float(cw @ u.ravel())
            v = u - s
        else:
            v = v + dt * w * F
            v = v - float(cw @ v.ravel())
    return v, s


def _newton(problem: _NewtonProblem, v0, s0, tol=1e-11, max_iter=40):
    grid = problem.grid
    v = np.array(v0, float, copy=True)
    s = float(s0)
    vol = float(np.sum(grid.dV))
    cw = (grid.dV / vol).ravel()
    h_min = min(grid.h)
    n = grid.n_nodes
    relax_budget = 8
    it = 0
    norm = np.inf
    while it < max_iter:
        F, cl, w = problem.residual(v, s)
        g = float(cw @ v.ravel())
        norm = max(float(np.max(np.abs(F))), abs(g))
        tol_eff = max(tol, 64.0 * np.finfo(float).eps
                      * (1.0 + float(np.max(np.abs(v))) + abs(s)) / h_min**2)
        if norm < tol_eff:
            return v, s, norm, it, cl, w
        merit0 = float(np.sqrt(np.mean(F**2) + g**2))
        J = fd_jacobian(lambda z: problem.res_flat(z, s), v, grid)
        ds_col = np.sqrt(np.finfo(float).eps) * (1.0 + abs(s))
        dFds = ((problem.res_flat(v, s + ds_col) - F) / ds_col).ravel()
        A = sp.bmat([[J, sp.csr_matrix(dFds[:, None])],
                     [sp.csr_matrix(cw[None, :]), None]], format="csc")
        rhs = -np.concatenate([F.ravel(), [g]])
        try:
            dz = spsolve(A, rhs)
        except Exception as exc:
            raise SolverError(f"linear solve failed at iteration {it}: {exc}",
                              residual=norm) from exc
        if not np.all(np.isfinite(dz)):
            raise SolverError("singular Jacobian (non-finite Newton step)",
                              residual=norm)
        # cap the profile update so one step cannot leave the graph regime
        dv_max = float(np.max(np.abs(dz[:n])))
        cap = 2.0 * (1.0 + float(np.max(np.abs(v))))
        alpha = min(1.0, cap / dv_max) if dv_max > 0 else 1.0
        accepted = False
        for _ in range(8):
            v_try = v + alpha * dz[:n].reshape(grid.shape)
            s_try = s + alpha * dz[n]
            F_try = problem.res_flat(v_try, s_try)
            g_try = float(cw @ v_try.ravel())
            m_try = float(np.sqrt(np.mean(F_try**2) + g_try**2))
            if np.isfinite(m_try) and m_try < merit0 * (1.0 - 1e-4 * alpha):
                v, s = v_try, s_try
                accepted = True
                break
            alpha *= 0.5
        it += 1
        if not accepted or alpha < 1.0 / 64.0:
            if norm < 1e4 * tol_eff:
                return v, s, norm, it, cl, w
            if relax_budget == 0:
                raise SolverError(f"line search stalled at residual {norm:.3e}",
                                  residual=norm)
            relax_budget -= 1
            v, s = _relax(problem, v, s, cw)
    F, cl, w = problem.residual(v, s)
    g = float(cw @ v.ravel())
    norm = max(float(np.max(np.abs(F))), abs(g))
    tol_eff = max(tol, 64.0 * np.finfo(float).eps
                  * (1.0 + float(np.max(np.abs(v))) + abs(s)) / h_min**2)
    if norm < 1e2 * tol_eff:
        return v, s, norm, max_iter, cl, w
    raise SolverError(f"Newton did not converge ({max_iter} iterations, "
                      f"residual {norm:.3e})", residual=norm)


def solve_regularized(grid, phi, eps, u0=None, tol=1e-11, max_iter=40):
    """Solve div(grad u / w) = eps u / w with the oblique BC.

    Returns a :class:`TranslatorSolution` whose speed is eps * mean(u).
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if u0 is None:
        u0 = np.zeros(grid.shape)
    u0 = np.asarray(u0, float)
    m0 = _volmean(u0, grid)
    prob = _NewtonProblem(grid, phi, "regularized", eps=eps)
    v, m, norm, it, cl, w = _newton(prob, u0 - m0, m0, tol=tol, max_iter=max_iter)
    return TranslatorSolution(u=v, speed=float(eps * m), mode="regularized", eps=eps,
                              residual=float(norm), n_iter=it,
                              eps_trace=[(eps, float(eps * m))],
                              bc_residual=cl.residual, max_w=float(np.max(w)))


def solve_pinned(grid, phi, u0, c0, tol=1e-11, max_iter=40):
    """Solve div(grad u / w) = C / w with (u, C) unknown and mean(u) = 0."""
    u0 = np.asarray(u0, float)
    v0 = u0 - _volmean(u0, grid)
    prob = _NewtonProblem(grid, phi, "pinned")
    v, c, norm, it, cl, w = _newton(prob, v0, float(c0), tol=tol, max_iter=max_iter)
    return TranslatorSolution(u=v, speed=float(c), mode="pinned", eps=None,
                              residual=norm, n_iter=it,
                              bc_residual=cl.residual, max_w=float(np.max(w)))


def continuation_solve(grid, phi, eps_start=1e-2, n_eps=6, ratio=0.5,
                       tol=1e-11, u0=None, polish=True):
    """Drive eps -> 0 with warm starts, extrapolate C, optionally polish.

    The mean of the regularized solution scales like C / eps, so warm starts
    rescale the previous mean by the eps ratio.  Speeds C_eps = eps * mean(u)
    behave like C + a * eps; the last two entries give a Richardson value
    that the pinned solve then refines.
    """
    eps_list = [eps_start * ratio**k for k in range(n_eps)]
    trace = []
    v = np.zeros(grid.shape) if u0 is None else (np.asarray(u0, float)
                                                 - _volmean(u0, grid))
    m = 0.0
    eps_prev = None
    sol = None
    for eps in eps_list:
        if eps_prev is not None:
            m = m * eps_prev / eps
        sol = solve_regularized(grid, phi, eps, u0=v + m, tol=tol)
        v = sol.u
        m = sol.speed / eps
        trace.append((eps, sol.speed))
        eps_prev = eps
    if len(trace) >= 2:
        (e1, c1), (e2, c2) = trace[-2], trace[-1]
        c_extrap = (e1 * c2 - e2 * c1) / (e1 - e2)
    else:
        c_extrap = trace[-1][1]
    if polish:
        sol = solve_pinned(grid, phi, v, c_extrap, tol=tol)
        sol.eps_trace = trace
        return sol
    out = TranslatorSolution(u=v, speed=c_extrap, mode="regularized",
                             eps=eps_list[-1], residual=sol.residual,
                             n_iter=sol.n_iter, eps_trace=trace,
                             bc_residual=sol.bc_residual, max_w=sol.max_w)
    return out


def speed_quadrature(u, grid, phi):
    """Independent speed route: C = -int Phi ds / int (1/w) dV."""
    cl = oblique_bc_closure(u, grid, phi)
    w = compute_w(gradient(u, grid, cl.ghosts), grid)
    num = grid.integrate_boundary(boundary_phi_values(grid, phi, u))
    den = grid.integrate_domain(1.0 / w)
    return -num / den


def _smooth_random_field(grid, rng, amplitude):
    """Low-mode random start: bounded gradients at any resolution."""
    field = np.zeros(grid.shape)
    for k, ax in enumerate(grid.axes):
        lo, hi = float(ax[0]), float(ax[-1])
        xi = (np.asarray(ax) - lo) / max(hi - lo, 1e-300)
        c = rng.standard_normal(4)
        prof = c[0] + c[1] * xi + c[2] * np.sin(np.pi * xi) + c[3] * np.cos(2 * np.pi * xi)
        shape = [1] * grid.dim
        shape[k] = len(ax)
        field = field + prof.reshape(shape)
    return amplitude * field


def uniqueness_probe(grid, phi, eps=1e-3, seeds=(0, 1, 2), amplitude=0.5,
                     tol=1e-11):
    """Solve from several perturbed starts; return profiles, speeds, spreads."""
    speeds = []
    profiles = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        u0 = _smooth_random_field(grid, rng, amplitude)
        sol = solve_regularized(grid, phi, eps, u0=u0, tol=tol)
        speeds.append(sol.speed)
        profiles.append(sol.u)
    spread = max(speeds) - min(speeds) if speeds else 0.0
    prof_spread = 0.0
    for i in range(len(profiles)):
        for j in range(i + 1, len(profiles)):
            prof_spread = max(prof_spread,
                              float(np.max(np.abs(profiles[i] - profiles[j]))))
    return speeds, spread, prof_spread


class TranslatorSolver(BaseEstimator):
    """Estimator-style front end for the continuation solver.

    After :meth:`fit` the instance exposes ``solution_``, ``u_`` (mean-zero
    profile), ``speed_`` and ``speed_quadrature_`` (the flux/volume route).
    """

    def __init__(self, eps_start=1e-2, n_eps=6, ratio=0.5, tol=1e-11,
                 polish=True):
        self.eps_start = eps_start
        self.n_eps = n_eps
        self.ratio = ratio
        self.tol = tol
        self.polish = polish

    def fit(self, grid, phi, u0=None):
        self.solution_ = continuation_solve(
            grid, phi, eps_start=self.eps_start, n_eps=self.n_eps,
            ratio=self.ratio, tol=self.tol, u0=u0, polish=self.polish)
        self.u_ = self.solution_.u
        self.speed_ = self.solution_.speed
        self.speed_quadrature_ = speed_quadrature(self.u_, grid, phi)
        return self
