"""Discrete operators for graph mean curvature flow.

Contains the metric gradient, the tilt factor w = sqrt(1 + |grad u|^2_sigma),
the conservative mean-curvature operator div(grad u / w) and the oblique
contact-angle boundary closure.

Sign convention (used consistently by the whole package): gamma is the
*inward* unit normal and the boundary condition reads  grad_gamma u = Phi w.
The closure is the closed form

    grad_gamma u = Phi * sqrt((1 + |grad^T u|^2) / (1 - Phi^2)),

enforced through one layer of ghost nodes so the centered normal difference
at each boundary node matches it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grid import BoundaryFace, DomainGrid


# -- contact angle data -------------------------------------------------------


@dataclass
class ContactAngle:
    """Prescribed contact-angle cosine Phi on the physical boundary faces.

    ``segments`` maps face names to callables ``phi(points, u) -> values``;
    Phi may depend on position and on u.  ``|Phi| <= phi0 < 1`` is enforced
    at every evaluation.
    """

    phi0: float
    segments: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.phi0 < 1.0:
            raise ValueError(f"need |Phi| <= Phi0 < 1, got Phi0 = {self.phi0}")

    @staticmethod
    def constant(value, phi0=None):
        value = float(value)
        if phi0 is None:
            phi0 = abs(value)
        seg = {None: lambda pts, u: np.full(len(pts), value)}
        return ContactAngle(phi0=phi0, segments=seg)

    @staticmethod
    def per_segment(values, phi0=None):
        values = {k: float(v) for k, v in values.items()}
        if phi0 is None:
            phi0 = max((abs(v) for v in values.values()), default=0.0)
        seg = {k: (lambda pts, u, v=v: np.full(len(pts), v)) for k, v in values.items()}
        return ContactAngle(phi0=phi0, segments=seg)

    def values(self, face: BoundaryFace, points, u):
        """Evaluate Phi on one face; symmetry closures always get Phi = 0."""
        if not face.physical:
            return np.zeros(len(points))
        fn = self.segments.get(face.name, self.segments.get(None))
        if fn is None:
            return np.zeros(len(points))
        phi = np.asarray(fn(points, u), float)
        if np.any(np.abs(phi) > self.phi0 + 1e-12):
            raise ValueError(
                f"|Phi| exceeds Phi0 = {self.phi0} on face {face.name} "
                "(contract |Phi| <= Phi0 < 1)")
        return phi

    def validate(self, grid: DomainGrid):
        """Check |Phi(x, 0)| <= phi0 on every physical boundary node."""
        for face in grid.faces:
            self.values(face, face.points, np.zeros(len(face.points)))


# -- graph state --------------------------------------------------------------


@dataclass
class GraphState:
    """Nodal height field at one time, with cached gradient and tilt factor."""

    u: np.ndarray
    t: float
    grad: tuple
    w: np.ndarray

    @classmethod
    def from_u(cls, u, grid, t=0.0):
        u = np.asarray(u, float)
        g = gradient(u, grid)
        return cls(u=u.copy(), t=float(t), grad=g, w=compute_w(g, grid))


# -- boundary closure ---------------------------------------------------------


def _face_u(u, face):
    """Nodal values of u along a boundary face, as a 1D array."""
    if face.axis == 0:
        return u[0] if face.side == 0 else u[-1]
    return u[:, 0] if face.side == 0 else u[:, -1]


def _face_mirror(u, face):
    """First interior neighbor values across the face."""
    if face.axis == 0:
        return u[1] if face.side == 0 else u[-2]
    return u[:, 1] if face.side == 0 else u[:, -2]


def _tangential_derivative(u_b, grid, face):
    """d(u)/d(tangential coordinate) along a face.

    Fourth order, so the closure's ghost values track the smooth extension
    closely enough to keep the flux second order at boundary nodes.
    """
    if face.tang_axis is None:
        return np.zeros_like(np.atleast_1d(u_b))
    ht = grid.h[face.tang_axis]
    if grid.periodic[face.tang_axis]:
        return (8.0 * (np.roll(u_b, -1) - np.roll(u_b, 1))
                - (np.roll(u_b, -2) - np.roll(u_b, 2))) / (12.0 * ht)
    a = np.empty_like(u_b)
    a[2:-2] = (u_b[:-4] - 8.0 * u_b[1:-3] + 8.0 * u_b[3:-1] - u_b[4:]) / (12.0 * ht)
    a[0] = (-25.0 * u_b[0] + 48.0 * u_b[1] - 36.0 * u_b[2]
            + 16.0 * u_b[3] - 3.0 * u_b[4]) / (12.0 * ht)
    a[1] = (-3.0 * u_b[0] - 10.0 * u_b[1] + 18.0 * u_b[2]
            - 6.0 * u_b[3] + u_b[4]) / (12.0 * ht)
    a[-1] = (25.0 * u_b[-1] - 48.0 * u_b[-2] + 36.0 * u_b[-3]
             - 16.0 * u_b[-4] + 3.0 * u_b[-5]) / (12.0 * ht)
    a[-2] = (3.0 * u_b[-1] + 10.0 * u_b[-2] - 18.0 * u_b[-3]
             + 6.0 * u_b[-4] - u_b[-5]) / (12.0 * ht)
    return a


def _normal_third_derivative(u, grid, face):
    """One-sided estimate of d^3 u / dn^3 at the nodes of a face."""
    h = grid.h[face.axis]
    take = lambda i: np.atleast_1d(np.take(u, i, axis=face.axis))
    if face.side == 0:
        return (-take(0) + 3.0 * take(1) - 3.0 * take(2) + take(3)) / h**3
    return (take(-1) - 3.0 * take(-2) + 3.0 * take(-3) - take(-4)) / h**3


def _face_inv_t_at_nodes(grid, face):
    """sigma^{tt} at the boundary nodes of a face (0-array in 1D)."""
    if face.tang_axis is None:
        return np.zeros(len(face.flat_index))
    s = grid.inv_diag[face.tang_axis].ravel()
    return s[face.flat_index]


@dataclass
class Closure:
    """Result of the oblique BC closure: ghost layers and boundary data."""

    ghosts: dict                   # (axis, side) -> ghost value array
    q: dict                        # face name -> grad_gamma u values
    tang: dict                     # face name -> tangential derivative used
    residual: float                # max |grad_gamma u - Phi w| over faces


def oblique_bc_closure(u, grid, phi, frozen_tang=None):
    """Set ghost values so the centered normal difference matches Phi w.

    ``frozen_tang`` optionally supplies the tangential derivatives per face
    (the lagged term of the elliptic solver's outer iteration); by default
    they are computed from the current ``u``.
    """
    u = np.asarray(u, float)
    ghosts = {}
    qmap, tmap = {}, {}
    residual = 0.0
    for face in grid.faces:
        u_b = np.atleast_1d(_face_u(u, face))
        if frozen_tang is not None and face.name in frozen_tang:
            a = frozen_tang[face.name]
        else:
            a = _tangential_derivative(u_b, grid, face)
        inv_t = _face_inv_t_at_nodes(grid, face)
        at2 = inv_t * a * a
        pv = phi.values(face, face.points, u_b)
        q = pv * np.sqrt((1.0 + at2) / (1.0 - pv * pv))
        mirror = np.atleast_1d(_face_mirror(u, face))
        # mirror ghost (centered difference recovers du/dn = sign*sqrt_snn*q)
        # plus the h^3/3 * d^3u/dn^3 Taylor term, so the ghost matches the
        # smooth extension to O(h^4) and the flux stays second order at the
        # boundary node
        h = grid.h[face.axis]
        t3 = _normal_third_derivative(u, grid, face)
        ghost = mirror - 2.0 * h * face.sqrt_snn * q - face.sign * (h**3 / 3.0) * t3
        ghosts[(face.axis, face.side)] = ghost if face.tang_axis is not None else ghost[0]
        qmap[face.name] = q
        tmap[face.name] = a
        # BC fixed-point residual against the *actual* tangential derivative
        a_now = _tangential_derivative(u_b, grid, face)
        w_b = np.sqrt(1.0 + inv_t * a_now * a_now + q * q)
        residual = max(residual, float(np.max(np.abs(q - pv * w_b))) if len(q) else 0.0)
    return Closure(ghosts=ghosts, q=qmap, tang=tmap, residual=residual)


# -- gradient and tilt factor -------------------------------------------------


def _axis_derivative(u, grid, axis, ghosts=None):
    h = grid.h[axis]
    if grid.periodic[axis]:
        return (np.roll(u, -1, axis=axis) - np.roll(u, 1, axis=axis)) / (2.0 * h)
    g = np.empty_like(u)
    lo = [slice(None)] * u.ndim
    hi = [slice(None)] * u.ndim
    mid = [slice(None)] * u.ndim
    mid[axis] = slice(1, -1)
    up = [slice(None)] * u.ndim
    dn = [slice(None)] * u.ndim
    up[axis] = slice(2, None)
    dn[axis] = slice(None, -2)
    g[tuple(mid)] = (u[tuple(up)] - u[tuple(dn)]) / (2.0 * h)
    lo[axis] = 0
    hi[axis] = -1
    if ghosts is not None and (axis, 0) in ghosts:
        s1 = [slice(None)] * u.ndim
        s1[axis] = 1
        g[tuple(lo)] = (u[tuple(s1)] - ghosts[(axis, 0)]) / (2.0 * h)
        s2 = [slice(None)] * u.ndim
        s2[axis] = -2
        g[tuple(hi)] = (ghosts[(axis, 1)] - u[tuple(s2)]) / (2.0 * h)
    else:
        # one-sided second order before any BC closure is available
        s1 = [slice(None)] * u.ndim
        s2 = [slice(None)] * u.ndim
        s1[axis] = 1
        s2[axis] = 2
        g[tuple(lo)] = (-3.0 * u[tuple(lo)] + 4.0 * u[tuple(s1)] - u[tuple(s2)]) / (2.0 * h)
        s1[axis] = -2
        s2[axis] = -3
        g[tuple(hi)] = (3.0 * u[tuple(hi)] - 4.0 * u[tuple(s1)] + u[tuple(s2)]) / (2.0 * h)
    return g


def gradient(u, grid, ghosts=None):
    """Chart partial derivatives of u per axis (centered; ghosts optional)."""
    u = np.asarray(u, float)
    return tuple(_axis_derivative(u, grid, k, ghosts) for k in range(grid.dim))


def compute_w(grad, grid):
    """Tilt factor w = sqrt(1 + sigma^{jk} du_j du_k) from chart partials."""
    n2 = np.zeros(grid.shape)
    for k in range(grid.dim):
        n2 += grid.inv_diag[k] * grad[k] ** 2
    return np.sqrt(1.0 + n2)


def compute_w_from_u(u, grid, ghosts=None):
    return compute_w(gradient(u, grid, ghosts), grid)


# -- mean curvature operator --------------------------------------------------


def _face_diffs(u, grid, axis, ghosts):
    """Normal differences at all faces along ``axis`` (exterior faces via ghosts)."""
    h = grid.h[axis]
    if grid.periodic[axis]:
        return (u - np.roll(u, 1, axis=axis)) / h
    d_int = np.diff(u, axis=axis) / h
    lo = [slice(None)] * u.ndim
    hi = [slice(None)] * u.ndim
    lo[axis] = slice(0, 1)
    hi[axis] = slice(-1, None)
    g_lo = ghosts[(axis, 0)]
    g_hi = ghosts[(axis, 1)]
    d_lo = (u[tuple(lo)] - np.asarray(g_lo).reshape(u[tuple(lo)].shape)) / h
    d_hi = (np.asarray(g_hi).reshape(u[tuple(hi)].shape) - u[tuple(hi)]) / h
    return np.concatenate([d_lo, d_int, d_hi], axis=axis)


def _face_tangential(g_t, grid, axis):
    """Tangential derivative interpolated to the faces along ``axis``.

    Interior faces average the two adjacent nodal values.  The exterior
    half-faces average the boundary node with a quadratically extrapolated
    ghost value, which reproduces the interior faces' averaging bias so the
    flux divergence stays second order at the boundary node.
    """
    if grid.periodic[axis]:
        return 0.5 * (g_t + np.roll(g_t, 1, axis=axis))
    mid = 0.5 * (np.take(g_t, range(1, g_t.shape[axis]), axis=axis)
                 + np.take(g_t, range(0, g_t.shape[axis] - 1), axis=axis))
    a0 = np.take(g_t, [0], axis=axis)
    a1 = np.take(g_t, [1], axis=axis)
    a2 = np.take(g_t, [2], axis=axis)
    lo = 2.0 * a0 - 1.5 * a1 + 0.5 * a2
    b0 = np.take(g_t, [-1], axis=axis)
    b1 = np.take(g_t, [-2], axis=axis)
    b2 = np.take(g_t, [-3], axis=axis)
    hi = 2.0 * b0 - 1.5 * b1 + 0.5 * b2
    return np.concatenate([lo, mid, hi], axis=axis)


def mean_curvature_op(u, grid, ghosts):
    """M[u] = (1/sqrt det) d_j (sqrt det sigma^{jk} d_k u / w), conservative.

    The flux is differenced on staggered faces; the face tilt factor combines
    the exact normal difference with the tangential derivative averaged from
    the two adjacent nodal stencils.  Requires ghost values from
    :func:`oblique_bc_closure` (or manufactured ones).
    """
    u = np.asarray(u, float)
    grad = gradient(u, grid, ghosts)
    out = np.zeros(grid.shape)
    for k in range(grid.dim):
        d = _face_diffs(u, grid, k, ghosts)
        n2 = grid.face_inv_n[k] * d * d
        if grid.dim == 2:
            t = 1 - k
            a_f = _face_tangential(grad[t], grid, k)
            n2 = n2 + grid.face_inv_t[k] * a_f * a_f
        w_f = np.sqrt(1.0 + n2)
        flux = grid.face_coef[k] * d / w_f
        if grid.periodic[k]:
            div = np.roll(flux, -1, axis=k) - flux
        else:
            div = np.diff(flux, axis=k)
        out += div / grid.h[k]
    return out / grid.sqrt_det


def aij_spectral_bound(grid):
    """Upper bound on the coordinate diffusion coefficients' eigenvalues."""
    return grid.spectral_bound()


# -- combined evaluation ------------------------------------------------------


def evaluate_rhs(u, grid, phi, frozen_tang=None):
    """One full operator evaluation: closure, w, M[u], u_t = w M[u].

    Returns ``(ut, w, M, closure)``.
    """
    cl = oblique_bc_closure(u, grid, phi, frozen_tang=frozen_tang)
    g = gradient(u, grid, cl.ghosts)
    w = compute_w(g, grid)
    M = mean_curvature_op(u, grid, cl.ghosts)
    return w * M, w, M, cl
