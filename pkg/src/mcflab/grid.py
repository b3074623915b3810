"""Structured grids over the base domain with metric-weighted quadrature.

Three domain kinds are supported, matching the metric families:

* ``interval``  -- 1D [x_lo, x_hi], boundary is two points (counting measure),
* ``rectangle`` -- 2D tensor grid in Cartesian coordinates,
* ``polar``     -- 2D annulus/disk in (r, theta), periodic in theta.  A
  "disk" is an annulus whose inner ring is a symmetry closure (excised pole
  cap) rather than a physical boundary.

Node ordering is lexicographic (C order) throughout.  All metric factors are
precomputed at nodes and at cell faces, including the exterior half-faces
used by the ghost-node boundary closure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError
from .metrics import ChartDomainError, MetricField

MIN_RESOLUTION = 8


@dataclass(frozen=True)
class DomainSpec:
    """Declarative description of the base domain and its resolution."""

    kind: str                      # interval | rectangle | polar
    bounds: tuple                  # interval: (x_lo, x_hi); rectangle: (x_lo, x_hi, y_lo, y_hi); polar: (r_lo_or_None, r_hi)
    n: tuple                       # cells per axis (theta: nodes == cells)
    inner: str = "symmetry"        # polar only: symmetry | physical

    @staticmethod
    def interval(x_lo, x_hi, n):
        return DomainSpec("interval", (float(x_lo), float(x_hi)), (int(n),))

    @staticmethod
    def rectangle(x_lo, x_hi, y_lo, y_hi, nx, ny):
        return DomainSpec("rectangle", (float(x_lo), float(x_hi), float(y_lo), float(y_hi)),
                          (int(nx), int(ny)))

    @staticmethod
    def polar(r_hi, n_r, n_theta, r_lo=None, inner="symmetry"):
        lo = None if r_lo is None else float(r_lo)
        return DomainSpec("polar", (lo, float(r_hi)), (int(n_r), int(n_theta)), inner=inner)


@dataclass(frozen=True)
class BoundaryFace:
    """One boundary segment: a coordinate face of the structured grid."""

    name: str                      # x_lo, x_hi, y_lo, y_hi, r_lo, r_hi
    axis: int
    side: int                      # 0 = low end, 1 = high end
    physical: bool                 # False for the polar symmetry closure
    sign: float                    # inward direction along the axis: +1 low, -1 high
    points: np.ndarray             # (m, dim) chart coordinates of the face nodes
    sqrt_snn: np.ndarray           # (m,) sqrt(sigma_nn) along the face
    ds: np.ndarray                 # (m,) boundary quadrature weights
    gamma: np.ndarray              # (m, dim) inward unit normal (chart components)
    tang_axis: Optional[int]       # tangential axis index, None in 1D
    flat_index: np.ndarray         # (m,) flat node indices (C order)


@dataclass(frozen=True)
class DomainGrid:
    """Immutable grid: nodes, quadrature, boundary data, metric factors."""

    kind: str
    chart: str
    metric: MetricField
    spec: DomainSpec
    axes: tuple                    # per-axis 1D node coordinate arrays
    h: tuple                       # per-axis spacings
    shape: tuple
    periodic: tuple
    sqrt_det: np.ndarray           # at nodes
    inv_diag: tuple                # per-axis sigma^{kk} at nodes
    dV: np.ndarray                 # metric-weighted node quadrature weights
    faces: tuple                   # BoundaryFace per non-periodic axis end
    face_coef: tuple               # per axis: sqrt_det * sigma^{kk} at faces
    face_inv_n: tuple              # per axis: sigma^{kk} at faces
    face_inv_t: tuple              # per axis: sigma^{tt} at faces (None in 1D)
    boundary_points: np.ndarray    # aggregated (K, dim), corners merged
    boundary_ds: np.ndarray
    boundary_gamma: np.ndarray
    boundary_physical: np.ndarray  # bool mask
    boundary_flat_index: np.ndarray

    @property
    def dim(self):
        return len(self.shape)

    @property
    def n_nodes(self):
        return int(np.prod(self.shape))

    def nodes(self):
        """Chart coordinates of all nodes, shape (dim, *shape)."""
        grids = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(grids)

    def integrate_domain(self, phi):
        """Second-order quadrature of a nodal scalar field over Omega."""
        phi = np.asarray(phi, float)
        if phi.shape != self.shape:
            raise ValueError(f"field shape {phi.shape} != grid shape {self.shape}")
        return float(np.sum(phi * self.dV))

    def integrate_boundary(self, phi, physical_only=True):
        """Quadrature of a scalar given on the aggregated boundary node list."""
        phi = np.asarray(phi, float)
        if phi.shape != self.boundary_ds.shape:
            raise ValueError("boundary field length mismatch")
        w = self.boundary_ds
        if physical_only:
            w = np.where(self.boundary_physical, w, 0.0)
        return float(np.sum(phi * w))

    def spectral_bound(self):
        """Max over nodes of the largest eigenvalue of sigma^{ij}."""
        return float(max(np.max(s) for s in self.inv_diag))


def _trapezoid_weights(n_nodes, h):
    w = np.full(n_nodes, h)
    w[0] = w[-1] = h / 2.0
    return w


def build_grid(domain, metric):
    """Build a :class:`DomainGrid` for ``domain`` under ``metric``.

    Raises :class:`ConfigurationError` when the resolution is too coarse, the
    metric is incompatible with the domain chart, or the domain (including
    the exterior ghost half-faces) touches a chart singularity.
    """
    if not isinstance(domain, DomainSpec):
        raise ConfigurationError("domain must be a DomainSpec")
    for n in domain.n:
        if n < MIN_RESOLUTION:
            raise ConfigurationError(f"resolution {n} < minimum {MIN_RESOLUTION}")
    try:
        if domain.kind == "interval":
            return _build_interval(domain, metric)
        if domain.kind == "rectangle":
            return _build_rectangle(domain, metric)
        if domain.kind == "polar":
            return _build_polar(domain, metric)
    except ChartDomainError as exc:
        raise ConfigurationError(f"domain touches chart singularity: {exc}") from exc
    raise ConfigurationError(f"unknown domain kind {domain.kind!r}")


def _build_interval(domain, metric):
    x_lo, x_hi = domain.bounds
    if not x_hi > x_lo:
        raise ConfigurationError("interval needs x_hi > x_lo")
    (n,) = domain.n
    h = (x_hi - x_lo) / n
    x = x_lo + h * np.arange(n + 1)
    s11, = metric.diag("interval", (x,))
    sdet = np.sqrt(s11)
    inv = 1.0 / s11
    dV = sdet * _trapezoid_weights(n + 1, h)
    xf = x_lo - h / 2.0 + h * np.arange(n + 2)
    s11f, = metric.diag("interval", (xf,))
    face_coef = np.sqrt(s11f) / s11f
    faces = []
    for side, idx, xb in ((0, 0, x_lo), (1, n, x_hi)):
        sb = float(np.sqrt(s11[idx]))
        sign = 1.0 if side == 0 else -1.0
        faces.append(BoundaryFace(
            name="x_lo" if side == 0 else "x_hi", axis=0, side=side, physical=True,
            sign=sign, points=np.array([[xb]]), sqrt_snn=np.array([sb]),
            ds=np.array([1.0]), gamma=np.array([[sign / sb]]), tang_axis=None,
            flat_index=np.array([idx])))
    return _assemble(domain, metric, "interval", (x,), (h,), (n + 1,), (False,),
                     sdet, (inv,), dV, faces, (face_coef,), (1.0 / s11f,), (None,))


def _build_rectangle(domain, metric):
    x_lo, x_hi, y_lo, y_hi = domain.bounds
    if not (x_hi > x_lo and y_hi > y_lo):
        raise ConfigurationError("rectangle needs positive extents")
    nx, ny = domain.n
    hx, hy = (x_hi - x_lo) / nx, (y_hi - y_lo) / ny
    x = x_lo + hx * np.arange(nx + 1)
    y = y_lo + hy * np.arange(ny + 1)
    X, Y = np.meshgrid(x, y, indexing="ij")
    sxx, syy = metric.diag("cartesian", (X, Y))
    sdet = np.sqrt(sxx * syy)
    inv = (1.0 / sxx, 1.0 / syy)
    dV = sdet * np.outer(_trapezoid_weights(nx + 1, hx), _trapezoid_weights(ny + 1, hy))

    xf = x_lo - hx / 2.0 + hx * np.arange(nx + 2)
    Xf, Yf = np.meshgrid(xf, y, indexing="ij")
    s0n, s0t = metric.diag("cartesian", (Xf, Yf))
    yf = y_lo - hy / 2.0 + hy * np.arange(ny + 2)
    Xg, Yg = np.meshgrid(x, yf, indexing="ij")
    s1t, s1n = metric.diag("cartesian", (Xg, Yg))
    face_coef = (np.sqrt(s0n * s0t) / s0n, np.sqrt(s1n * s1t) / s1n)
    face_inv_n = (1.0 / s0n, 1.0 / s1n)
    face_inv_t = (1.0 / s0t, 1.0 / s1t)

    shape = (nx + 1, ny + 1)
    faces = []
    for name, axis, side in (("x_lo", 0, 0), ("x_hi", 0, 1), ("y_lo", 1, 0), ("y_hi", 1, 1)):
        if axis == 0:
            i = 0 if side == 0 else nx
            pts = np.column_stack([np.full(ny + 1, x[i]), y])
            snn = np.sqrt(sxx[i, :])
            ds = np.sqrt(syy[i, :]) * _trapezoid_weights(ny + 1, hy)
            flat = np.ravel_multi_index((np.full(ny + 1, i), np.arange(ny + 1)), shape)
            tang = 1
        else:
            j = 0 if side == 0 else ny
            pts = np.column_stack([x, np.full(nx + 1, y[j])])
            snn = np.sqrt(syy[:, j])
            ds = np.sqrt(sxx[:, j]) * _trapezoid_weights(nx + 1, hx)
            flat = np.ravel_multi_index((np.arange(nx + 1), np.full(nx + 1, j)), shape)
            tang = 0
        sign = 1.0 if side == 0 else -1.0
        gamma = np.zeros((len(snn), 2))
        gamma[:, axis] = sign / snn
        faces.append(BoundaryFace(name=name, axis=axis, side=side, physical=True,
                                  sign=sign, points=pts, sqrt_snn=snn, ds=ds,
                                  gamma=gamma, tang_axis=tang, flat_index=flat))
    return _assemble(domain, metric, "cartesian", (x, y), (hx, hy), shape,
                     (False, False), sdet, inv, dV, faces, face_coef,
                     face_inv_n, face_inv_t)


def _build_polar(domain, metric):
    r_lo, r_hi = domain.bounds
    n_r, n_th = domain.n
    if r_lo is None:
        # excise the pole cap: r_lo = 2h with h = (r_hi - r_lo)/n_r
        r_lo = 2.0 * r_hi / (n_r + 2)
    if not (0.0 < r_lo < r_hi):
        raise ConfigurationError("polar domain needs 0 < r_lo < r_hi")
    if domain.inner not in ("symmetry", "physical"):
        raise ConfigurationError(f"polar inner must be symmetry|physical, got {domain.inner!r}")
    hr = (r_hi - r_lo) / n_r
    if r_lo - hr / 2.0 <= 0.0:
        raise ConfigurationError("polar domain touches the pole (r_lo <= h/2)")
    hth = 2.0 * np.pi / n_th
    r = r_lo + hr * np.arange(n_r + 1)
    th = hth * np.arange(n_th)
    R, TH = np.meshgrid(r, th, indexing="ij")
    srr, stt = metric.diag("polar", (R, TH))
    sdet = np.sqrt(srr * stt)
    inv = (1.0 / srr, 1.0 / stt)
    dV = sdet * np.outer(_trapezoid_weights(n_r + 1, hr), np.full(n_th, hth))

    rf = r_lo - hr / 2.0 + hr * np.arange(n_r + 2)
    Rf, THf = np.meshgrid(rf, th, indexing="ij")
    s0n, s0t = metric.diag("polar", (Rf, THf))
    thf = th - hth / 2.0
    Rg, THg = np.meshgrid(r, thf, indexing="ij")
    s1t, s1n = metric.diag("polar", (Rg, THg))
    face_coef = (np.sqrt(s0n * s0t) / s0n, np.sqrt(s1n * s1t) / s1n)
    face_inv_n = (1.0 / s0n, 1.0 / s1n)
    face_inv_t = (1.0 / s0t, 1.0 / s1t)

    shape = (n_r + 1, n_th)
    faces = []
    for name, side, i in (("r_lo", 0, 0), ("r_hi", 1, n_r)):
        physical = True if side == 1 else (domain.inner == "physical")
        pts = np.column_stack([np.full(n_th, r[i]), th])
        snn = np.sqrt(srr[i, :])
        ds = np.sqrt(stt[i, :]) * hth
        sign = 1.0 if side == 0 else -1.0
        gamma = np.zeros((n_th, 2))
        gamma[:, 0] = sign / snn
        flat = np.ravel_multi_index((np.full(n_th, i), np.arange(n_th)), shape)
        faces.append(BoundaryFace(name=name, axis=0, side=side, physical=physical,
                                  sign=sign, points=pts, sqrt_snn=snn, ds=ds,
                                  gamma=gamma, tang_axis=1, flat_index=flat))
    return _assemble(domain, metric, "polar", (r, th), (hr, hth), shape,
                     (False, True), sdet, inv, dV, faces, face_coef,
                     face_inv_n, face_inv_t)


def _assemble(domain, metric, chart, axes, h, shape, periodic, sdet, inv, dV,
              faces, face_coef, face_inv_n, face_inv_t):
    # aggregated boundary node list, corners merged (bisector normal, summed ds)
    entries = {}
    order = []
    dim = len(shape)
    for f in faces:
        for m in range(len(f.flat_index)):
            idx = int(f.flat_index[m])
            if idx not in entries:
                entries[idx] = [f.points[m].copy(), float(f.ds[m]),
                                f.gamma[m].copy(), bool(f.physical)]
                order.append(idx)
            else:
                e = entries[idx]
                e[1] += float(f.ds[m])
                e[2] = e[2] + f.gamma[m]
                e[3] = e[3] or bool(f.physical)
    pts = np.array([entries[i][0] for i in order]).reshape(len(order), dim)
    ds = np.array([entries[i][1] for i in order])
    gam = np.array([entries[i][2] for i in order]).reshape(len(order), dim)
    phys = np.array([entries[i][3] for i in order], bool)
    # renormalize merged (corner) normals to unit metric length
    if dim == 1:
        diag = np.stack(metric.diag("interval", (pts[:, 0],)))
    else:
        diag = np.stack(metric.diag(chart, (pts[:, 0], pts[:, 1])))
    norm = np.sqrt(np.einsum("kn,nk->n", diag, gam**2))
    gam = gam / norm[:, None]
    return DomainGrid(kind=domain.kind, chart=chart, metric=metric, spec=domain,
                      axes=tuple(axes), h=tuple(float(v) for v in h), shape=tuple(shape),
                      periodic=tuple(periodic), sqrt_det=sdet, inv_diag=tuple(inv),
                      dV=dV, faces=tuple(faces), face_coef=tuple(face_coef),
                      face_inv_n=tuple(face_inv_n), face_inv_t=tuple(face_inv_t),
                      boundary_points=pts, boundary_ds=ds, boundary_gamma=gam,
                      boundary_physical=phys,
                      boundary_flat_index=np.array(order, dtype=int))
