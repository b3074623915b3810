"""Riemannian metrics on coordinate charts.

A metric is one of three closed-form families:

* ``euclidean``       -- flat, usable on any chart,
* ``conformal``       -- sigma = exp(2*lam(x,y)) * (dx^2 + dy^2),
* ``rot_symmetric``   -- sigma = dr^2 + f(r)^2 dtheta^2 on a polar chart.

All components, volume densities and the Gauss curvature are evaluated from
the defining functions, never from sampled data.  Supported charts are
``interval`` (1D), ``cartesian`` (2D rectangle coordinates) and ``polar``
(2D (r, theta) coordinates).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

EUCLIDEAN = "euclidean"
CONFORMAL = "conformal"
ROT_SYMMETRIC = "rot_symmetric"

_KINDS = (EUCLIDEAN, CONFORMAL, ROT_SYMMETRIC)
_CHARTS = ("interval", "cartesian", "polar")


class ChartDomainError(ValueError):
    """Raised for metric queries at chart singularities (pole, zero warp...)."""


@dataclass(frozen=True)
class MetricField:
    """Closed-form Riemannian metric on a 1D or 2D coordinate chart.

    For ``conformal`` metrics ``lam`` and ``lam_lap`` are the conformal
    exponent and its Euclidean Laplacian, both functions of Cartesian
    ``(x, y)``.  For ``rot_symmetric`` metrics ``warp`` and ``warp_d2`` are
    the warp function f(r) and its second derivative.
    """

    kind: str
    name: str = ""
    lam: Callable | None = None
    lam_lap: Callable | None = None
    warp: Callable | None = None
    warp_d2: Callable | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if self.kind == CONFORMAL and (self.lam is None or self.lam_lap is None):
            raise ValueError("conformal metric needs lam and lam_lap")
        if self.kind == ROT_SYMMETRIC and (self.warp is None or self.warp_d2 is None):
            raise ValueError("rot_symmetric metric needs warp and warp_d2")

    # -- component evaluation -------------------------------------------------

    def _conf(self, x, y):
        """Conformal factor exp(2*lam) at Cartesian points."""
        return np.exp(2.0 * self.lam(np.asarray(x, float), np.asarray(y, float)))

    def _warp_checked(self, r):
        r = np.asarray(r, float)
        if np.any(r <= 0.0):
            raise ChartDomainError("rot_symmetric metric queried at r <= 0 (pole)")
        f = np.asarray(self.warp(r), float)
        if np.any(f <= 0.0):
            raise ChartDomainError("warp function f(r) <= 0 inside query range")
        return f

    def diag(self, chart, coords):
        """Diagonal covariant components (sigma_11[, sigma_22]) at points.

        ``coords`` is ``(x,)`` for the interval chart, ``(x, y)`` for the
        Cartesian chart and ``(r, theta)`` for the polar chart, broadcastable
        arrays.  Off-diagonal components vanish for every supported family.
        """
        if chart not in _CHARTS:
            raise ValueError(f"unknown chart {chart!r}")
        if chart == "interval":
            (x,) = coords
            x = np.asarray(x, float)
            if self.kind == EUCLIDEAN:
                return (np.ones_like(x),)
            if self.kind == CONFORMAL:
                return (self._conf(x, np.zeros_like(x)),)
            raise ChartDomainError("rot_symmetric metric has no interval chart")
        if chart == "cartesian":
            x, y = np.broadcast_arrays(*[np.asarray(c, float) for c in coords])
            if self.kind == EUCLIDEAN:
                one = np.ones_like(x)
                return one, one.copy()
            if self.kind == CONFORMAL:
                s = self._conf(x, y)
                return s, s.copy()
            raise ChartDomainError("rot_symmetric metric has no cartesian chart")
        # polar chart
        r, th = np.broadcast_arrays(*[np.asarray(c, float) for c in coords])
        if np.any(r <= 0.0):
            raise ChartDomainError("polar chart queried at r <= 0 (pole)")
        if self.kind == EUCLIDEAN:
            return np.ones_like(r), r**2
        if self.kind == ROT_SYMMETRIC:
            f = self._warp_checked(r)
            return np.ones_like(r), f**2
        s = self._conf(r * np.cos(th), r * np.sin(th))
        return s, s * r**2

    def inv_diag(self, chart, coords):
        """Diagonal contravariant components sigma^{kk} at points."""
        return tuple(1.0 / s for s in self.diag(chart, coords))

    def sqrt_det(self, chart, coords):
        """Volume density sqrt(det sigma) at points."""
        d = self.diag(chart, coords)
        out = d[0].copy()
        for s in d[1:]:
            out *= s
        return np.sqrt(out)

    def gauss_curvature(self, chart, coords):
        """Gauss curvature K at points (0 for flat and for 1D charts)."""
        if chart == "interval":
            (x,) = coords
            return np.zeros_like(np.asarray(x, float))
        if self.kind == EUCLIDEAN:
            shp = np.broadcast(*[np.asarray(c, float) for c in coords]).shape
            return np.zeros(shp)
        if self.kind == ROT_SYMMETRIC:
            r = np.asarray(coords[0], float)
            f = self._warp_checked(r)
            k = -np.asarray(self.warp_d2(r), float) / f
            return np.broadcast_to(k, np.broadcast(*[np.asarray(c, float) for c in coords]).shape).copy()
        # conformal: K = -exp(-2 lam) * Lap(lam), with lam in Cartesian coords
        if chart == "polar":
            r, th = np.broadcast_arrays(*[np.asarray(c, float) for c in coords])
            x, y = r * np.cos(th), r * np.sin(th)
        else:
            x, y = np.broadcast_arrays(*[np.asarray(c, float) for c in coords])
        return -np.exp(-2.0 * self.lam(x, y)) * np.asarray(self.lam_lap(x, y), float)

    def at(self, point, chart="cartesian"):
        """Full component tuple (sigma_ij, sigma^ij, sqrt det, K) at one point.

        Returns matrices of shape (dim, dim) for the 2D charts and (1, 1) for
        the interval chart.
        """
        coords = tuple(np.asarray([c], float) for c in np.atleast_1d(point))
        if chart == "interval" and len(coords) != 1:
            raise ValueError("interval chart expects one coordinate")
        if chart != "interval" and len(coords) != 2:
            raise ValueError(f"{chart} chart expects two coordinates")
        d = self.diag(chart, coords)
        dim = len(d)
        sig = np.zeros((dim, dim))
        inv = np.zeros((dim, dim))
        for k in range(dim):
            sig[k, k] = d[k][0]
            inv[k, k] = 1.0 / d[k][0]
        sdet = float(self.sqrt_det(chart, coords)[0])
        kcur = float(self.gauss_curvature(chart, coords)[0])
        return sig, inv, sdet, kcur


def metric_at(metric, point, chart="cartesian"):
    """Functional alias for :meth:`MetricField.at`."""
    return metric.at(point, chart=chart)


# -- catalog ------------------------------------------------------------------


def _poly2d(coeffs):
    c = np.asarray(coeffs, float)
    if c.ndim == 1:
        c = c[:, None]
    cx2 = np.polynomial.polynomial.polyder(c, 2, axis=0)
    cy2 = np.polynomial.polynomial.polyder(c, 2, axis=1) if c.shape[1] > 2 else np.zeros((1, 1))
    lam = lambda x, y: np.polynomial.polynomial.polyval2d(x, y, c)
    lap = lambda x, y: (np.polynomial.polynomial.polyval2d(x, y, cx2)
                        + np.polynomial.polynomial.polyval2d(x, y, cy2))
    return lam, lap


def make_metric(name, **params):
    """Build a catalog metric by name.

    Known names: ``euclidean``, ``poincare_disk``, ``hyperbolic_halfplane``,
    ``sphere`` (f = sin r), ``hyperbolic_polar`` (f = sinh r),
    ``conformal_poly`` (lam a 2D polynomial, ``coeffs`` required) and
    ``rot_poly`` (f a polynomial in r, ``coeffs`` required).
    """
    if name == "euclidean":
        return MetricField(EUCLIDEAN, name=name)
    if name == "poincare_disk":
        def lam(x, y):
            r2 = x**2 + y**2
            if np.any(r2 >= 1.0):
                raise ChartDomainError("poincare_disk chart requires |x| < 1")
            return np.log(2.0 / (1.0 - r2))
        # Lap log(2/(1-r^2)) = 4/(1-r^2)^2
        lap = lambda x, y: 4.0 / (1.0 - x**2 - y**2) ** 2
        return MetricField(CONFORMAL, name=name, lam=lam, lam_lap=lap)
    if name == "hyperbolic_halfplane":
        def lam(x, y):
            if np.any(y <= 0.0):
                raise ChartDomainError("half-plane chart requires y > 0")
            return -np.log(y)
        lap = lambda x, y: 1.0 / y**2
        return MetricField(CONFORMAL, name=name, lam=lam, lam_lap=lap)
    if name == "sphere":
        return MetricField(ROT_SYMMETRIC, name=name, warp=np.sin,
                           warp_d2=lambda r: -np.sin(r))
    if name == "hyperbolic_polar":
        return MetricField(ROT_SYMMETRIC, name=name, warp=np.sinh,
                           warp_d2=np.sinh)
    if name == "conformal_poly":
        lam, lap = _poly2d(params["coeffs"])
        return MetricField(CONFORMAL, name=name, lam=lam, lam_lap=lap,
                           params=dict(params))
    if name == "rot_poly":
        p = np.polynomial.Polynomial(np.asarray(params["coeffs"], float))
        return MetricField(ROT_SYMMETRIC, name=name, warp=p, warp_d2=p.deriv(2),
                           params=dict(params))
    raise ValueError(f"unknown metric name {name!r}")
