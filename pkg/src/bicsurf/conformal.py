"""Conformal (subharmonic) metrics ``e^{2u} h`` on the plane, the sphere and the torus.

A metric is a background :class:`~bicsurf.green.BackgroundGeometry` together
with a potential ``u`` given either as the Green potential of a signed
measure, as a closed-form expression, or as samples on a grid. Distances are
shortest paths in a weighted graph whose arcs are short background curves,
each weighted by the quadrature of ``e^u`` along it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from . import green, meshes, quadrature, steiner
from .errors import (
    BalanceViolationError,
    InadmissibleAtomError,
    IndeterminateSingularityError,
    InfiniteLengthError,
    InvalidArgumentError,
    StencilError,
    UnreachableError,
)
from .measure import GridDensity, SignedMeasure, compile_expression, total_mass

TWO_PI = 2.0 * np.pi
MASS_TOL = 1e-12  # |m - 2 pi| below this counts as exactly 2 pi
ARC_ORDER = 3
SINGULAR_ORDER = 8
DEFAULT_STEINER = 3
DEFAULT_STENCIL = 6


@dataclass(frozen=True)
class SingularPoint:
    """Declared conical singularity of a closed-form or grid potential.

    Near ``point`` the potential behaves like ``-(mass / 2 pi) log r``. For
    ``mass == 2 pi`` the flag ``finite`` says whether the point is at finite
    distance, and ``tail(r)`` must return the length of the radial segment
    from the point out to radius ``r``.
    """

    point: tuple
    mass: float
    finite: bool | None = None
    tail: str | None = None  # expression in r

    def __post_init__(self):
        object.__setattr__(self, "point", tuple(float(c) for c in self.point))
        object.__setattr__(self, "mass", float(self.mass))

    def tail_fn(self):
        return _compile_tail(self.tail)


@lru_cache(maxsize=64)
def _compile_tail(expr):
    f = compile_expression(expr, ("r",))
    return lambda r: float(f(np.asarray(r, dtype=float)))


@dataclass(frozen=True)
class InfinityPoint:
    point: tuple
    mass: float
    status: str  # "at-infinity" or "indeterminate"
    declared_finite: bool | None = None


@dataclass(frozen=True, eq=False)
class GridPotential:
    """Node samples ``values[j, i]`` at ``(x0 + i hx, y0 + j hy)`` with bilinear interpolation."""

    x0: float
    x1: float
    y0: float
    y1: float
    values: np.ndarray
    periodic: bool = False

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or min(v.shape) < 2:
            raise InvalidArgumentError("grid potential needs a 2D array with at least 2x2 samples")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def spacing(self):
        ny, nx = self.values.shape
        if self.periodic:
            return (self.x1 - self.x0) / nx, (self.y1 - self.y0) / ny
        return (self.x1 - self.x0) / (nx - 1), (self.y1 - self.y0) / (ny - 1)

    def __call__(self, pts):
        pts = np.atleast_2d(pts)
        ny, nx = self.values.shape
        hx, hy = self.spacing
        fx = (pts[:, 0] - self.x0) / hx
        fy = (pts[:, 1] - self.y0) / hy
        if self.periodic:
            i = np.floor(fx).astype(int)
            j = np.floor(fy).astype(int)
            tx, ty = fx - i, fy - j
            i0, i1 = i % nx, (i + 1) % nx
            j0, j1 = j % ny, (j + 1) % ny
        else:
            i = np.clip(np.floor(fx).astype(int), 0, nx - 2)
            j = np.clip(np.floor(fy).astype(int), 0, ny - 2)
            tx, ty = fx - i, fy - j
            i0, i1, j0, j1 = i, i + 1, j, j + 1
        v = self.values
        return (
            (1 - tx) * (1 - ty) * v[j0, i0]
            + tx * (1 - ty) * v[j0, i1]
            + (1 - tx) * ty * v[j1, i0]
            + tx * ty * v[j1, i1]
        )


@dataclass(frozen=True, eq=False)
class ConformalMetric:
    """Length element ``scale * e^{u + offset}`` times the background element.

    Parameters
    ----------
    background : BackgroundGeometry
    kind : {"measure", "closed", "grid"}
    measure : SignedMeasure, optional
        For ``kind="measure"``: ``u`` is the Green (or logarithmic) potential.
    expr : str, optional
        For ``kind="closed"``: sympy expression in ``x, y`` (``x, y, z`` on
        the sphere). ``func`` may be given instead of, or with, ``expr``.
    grid : GridPotential, optional
    singular : tuple of SingularPoint
        Declared singularities of closed-form and grid potentials.
    domain : (x0, x1, y0, y1), optional
        Compact chart rectangle where plane distances are computed.
    source_curvature : SignedMeasure, optional
        Curvature measure the metric was built from (set by
        :func:`classify_construct`); returned verbatim by :func:`curvature_of`.
    """

    background: green.BackgroundGeometry
    kind: str
    measure: SignedMeasure | None = None
    expr: str | None = None
    func: Callable | None = field(default=None, repr=False)
    grid: GridPotential | None = None
    offset: float = 0.0
    scale: float = 1.0
    singular: tuple = ()
    domain: tuple | None = None
    source_curvature: SignedMeasure | None = None
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "background", green.background(self.background))
        if self.kind not in ("measure", "closed", "grid"):
            raise InvalidArgumentError(f"unknown potential kind {self.kind!r}")
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise InvalidArgumentError("scale must be positive")
        if self.kind == "measure":
            if self.measure is None:
                raise InvalidArgumentError("measure potential needs a measure")
            green.check_balance(self.background, self.measure)
        elif self.kind == "closed":
            if self.func is None:
                if self.expr is None:
                    raise InvalidArgumentError("closed-form potential needs expr or func")
                variables = ("x", "y", "z") if self.background.kind == "sphere" else ("x", "y")
                f = compile_expression(self.expr, variables)
                object.__setattr__(self, "func", lambda p, _f=f: np.asarray(_f(*np.asarray(p).T), dtype=float))
        elif self.grid is None:
            raise InvalidArgumentError("grid potential needs a GridPotential")
        sing = tuple(s if isinstance(s, SingularPoint) else SingularPoint(tuple(s[0]), float(s[1])) for s in self.singular)
        object.__setattr__(self, "singular", sing)
        if self.domain is not None:
            object.__setattr__(self, "domain", tuple(float(v) for v in self.domain))

    # -- variants ------------------------------------------------------------
    def with_scale(self, lam):
        """Homothetic copy; graphs are shared because arc weights do not depend on ``scale``."""
        return replace(self, scale=self.scale * float(lam), _cache=self._cache)

    def with_offset(self, c):
        """Copy with potential ``u + c`` (its graphs are rebuilt from scratch)."""
        return replace(self, offset=self.offset + float(c), _cache={})

    # -- potential -----------------------------------------------------------
    def singular_points(self):
        """All singularities: atoms of the measure plus declared ones."""
        pts = []
        if self.kind == "measure":
            pts = [SingularPoint(a.point, a.mass) for a in self.measure.atoms]
        declared = {tuple(np.round(s.point, 12)): s for s in self.singular}
        out = []
        for s in pts:
            key = tuple(np.round(s.point, 12))
            out.append(declared.pop(key, s))
        out.extend(declared.values())
        return tuple(out)

    def u(self, x):
        """Potential ``u + offset`` at points ``x`` (``(d,)`` or ``(n, d)``)."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 1
        X = np.atleast_2d(x)
        if self.kind == "measure":
            v = green.potential(self.background, self.measure, X, check=False)
        elif self.kind == "closed":
            v = np.broadcast_to(self.func(X), X.shape[:1]).astype(float)
        else:
            v = self.grid(X)
        v = v + self.offset
        return float(v[0]) if scalar else v

    def conformal_factor(self, x):
        """``e^{2u}``: density of the metric with respect to the background."""
        return np.exp(2.0 * self.u(x))


# ---------------------------------------------------------------------------
# constructors


def from_measure(bg, mu, **kw):
    return ConformalMetric(green.background(bg), "measure", measure=mu, **kw)


def closed_form(bg, expr=None, func=None, **kw):
    return ConformalMetric(green.background(bg), "closed", expr=expr, func=func, **kw)


def from_grid(bg, grid, **kw):
    return ConformalMetric(green.background(bg), "grid", grid=grid, **kw)


def check_admissible(bg, omega, tol=green.BALANCE_TOL):
    """Gauss-Bonnet balance first, then every atom below ``2 pi``."""
    bg = green.background(bg)
    if not bg.closed:
        raise InvalidArgumentError("classification needs a closed background (sphere or torus)")
    if omega.carrier != bg.carrier:
        raise InvalidArgumentError(f"measure lives on {omega.carrier!r}, background is {bg.kind!r}")
    target = TWO_PI * bg.euler_characteristic
    m = total_mass(omega)
    if not abs(m - target) <= tol:
        raise BalanceViolationError(
            f"total curvature {m:.12g} differs from 2*pi*chi = {target:.12g}"
        )
    for a in omega.atoms:
        if a.mass >= TWO_PI:
            raise InadmissibleAtomError(
                f"atom of mass {a.mass:.12g} >= 2*pi at {a.point}", point=a.point, mass=a.mass
            )


def classify_construct(bg, omega: SignedMeasure, offset=0.0, scale=1.0, name=""):
    """Metric of curvature ``omega``: potential of ``mu = omega - K_h dA_h``.

    The metric is unique up to dilation; ``offset`` and ``scale`` pick the
    representative.
    """
    bg = green.background(bg)
    check_admissible(bg, omega)
    mu = omega - bg.curvature_measure()
    return ConformalMetric(
        bg, "measure", measure=mu, offset=offset, scale=scale, source_curvature=omega, name=name
    )


# ---------------------------------------------------------------------------
# curvature


def curvature_of(metric: ConformalMetric, order=2, shape=(256, 256)):
    """Curvature measure ``K_h dA_h + Delta u``.

    Symbolic for measure potentials. For closed-form and grid potentials on
    planar charts and the torus, the density ``K_h + Delta u`` is sampled by
    finite differences at cell centres and returned as a grid density; declared
    singular points are added as atoms.
    """
    bg = metric.background
    if metric.kind == "measure":
        if metric.source_curvature is not None:
            return metric.source_curvature
        return bg.curvature_measure() + metric.measure if bg.closed else metric.measure
    if bg.kind == "sphere":
        raise InvalidArgumentError("finite-difference curvature needs a planar chart or the torus")
    x0, x1, y0, y1 = _fd_domain(metric)
    ny, nx = shape
    pts, _ = quadrature.rect_midpoints(x0, x1, y0, y1, nx, ny)
    hx, hy = (x1 - x0) / nx, (y1 - y0) / ny
    lap = _laplacian_at(metric, pts, hx, hy, order)
    dens = bg.curvature + lap
    dens = np.where(np.isfinite(dens), dens, 0.0).reshape(ny, nx)
    atoms = tuple((s.point, s.mass) for s in metric.singular)
    return SignedMeasure(bg.carrier, atoms, ac=(GridDensity(x0, x1, y0, y1, dens),))


def _fd_domain(metric):
    if metric.background.kind == "torus":
        return (0.0, 1.0, 0.0, 1.0)
    if metric.domain is not None:
        return metric.domain
    if metric.kind == "grid":
        g = metric.grid
        return (g.x0, g.x1, g.y0, g.y1)
    raise InvalidArgumentError("plane metric needs a declared domain for finite differences")


_FD = {
    2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
    4: ((-2, -1 / 12), (-1, 4 / 3), (0, -5 / 2), (1, 4 / 3), (2, -1 / 12)),
}


def _laplacian_at(metric, pts, hx, hy, order):
    """``-(u_xx + u_yy)`` by centred differences of the requested order."""
    if order not in _FD:
        raise StencilError(f"unsupported stencil order {order}; use 2 or 4")
    with np.errstate(all="ignore"):
        acc = np.zeros(pts.shape[0])
        for off, c in _FD[order]:
            acc += c / hx ** 2 * _u_safe(metric, pts + [off * hx, 0.0])
            acc += c / hy ** 2 * _u_safe(metric, pts + [0.0, off * hy])
    return -acc


def _u_safe(metric, pts):
    """``u`` with NaN at points where it is singular."""
    if metric.kind == "measure" and metric.measure.atoms:
        bad = np.zeros(pts.shape[0], dtype=bool)
        for p in metric.measure.atom_points():
            bad |= metric.background.chord(pts, p) < green.ATOM_EXCLUSION
        out = np.full(pts.shape[0], np.nan)
        if np.any(~bad):
            out[~bad] = metric.u(pts[~bad])
        return out
    with np.errstate(all="ignore"):
        return np.asarray(metric.u(pts), dtype=float)


def _fd_grid(metric, shape):
    x0, x1, y0, y1 = _fd_domain(metric)
    ny, nx = shape
    if metric.background.kind == "torus":
        xs = x0 + (x1 - x0) * np.arange(nx) / nx
        ys = y0 + (y1 - y0) * np.arange(ny) / ny
    else:
        xs = np.linspace(x0, x1, nx)
        ys = np.linspace(y0, y1, ny)
    X, Y = np.meshgrid(xs, ys)
    return X, Y, xs[1] - xs[0], ys[1] - ys[0]


@dataclass
class LiouvilleReport:
    X: np.ndarray
    Y: np.ndarray
    residual: np.ndarray  # NaN outside the evaluated region
    max_norm: float
    curvature: np.ndarray  # finite-difference K of the conformal metric


def gaussian_curvature(metric, shape=(512, 512), order=2):
    """Finite-difference Gaussian curvature ``(K_h + Delta u) e^{-2u}`` on a node grid.

    Grid potentials use their own samples (``shape`` is ignored); other
    potentials are evaluated at the stencil points directly. Returns
    ``(X, Y, K)`` with NaN on the boundary band and near singularities.
    """
    half = order // 2
    bg = metric.background
    if metric.kind == "grid":
        g = metric.grid
        v = g.values + metric.offset
        ny, nx = v.shape
        hx, hy = g.spacing
        if min(nx, ny) < (1 if g.periodic else 2 * half + 1) or order not in _FD:
            raise StencilError(f"order-{order} stencil does not fit a {ny}x{nx} grid")
        if g.periodic:
            xs = g.x0 + hx * np.arange(nx)
            ys = g.y0 + hy * np.arange(ny)
        else:
            xs = np.linspace(g.x0, g.x1, nx)
            ys = np.linspace(g.y0, g.y1, ny)
        X, Y = np.meshgrid(xs, ys)
        lap = np.zeros_like(v)
        for off, c in _FD.get(order, ()):
            if g.periodic:
                lap += c / hx ** 2 * np.roll(v, -off, axis=1) + c / hy ** 2 * np.roll(v, -off, axis=0)
            else:
                lap[:, half:-half] += c / hx ** 2 * v[:, half + off : nx - half + off]
                lap[half:-half, :] += c / hy ** 2 * v[half + off : ny - half + off, :]
        lap = -lap
        if not g.periodic:
            lap[:half, :] = lap[-half:, :] = np.nan
            lap[:, :half] = lap[:, -half:] = np.nan
        K = (bg.curvature + lap) * np.exp(-2.0 * v)
        return X, Y, K
    if min(shape) < 2 * half + 1:
        raise StencilError(f"order-{order} stencil does not fit a {shape} grid")
    X, Y, hx, hy = _fd_grid(metric, shape)
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    lap = _laplacian_at(metric, pts, hx, hy, order)
    with np.errstate(all="ignore"):
        K = (bg.curvature + lap) * np.exp(-2.0 * _u_safe(metric, pts))
    K = K.reshape(X.shape)
    if bg.kind != "torus":
        K[:half, :] = K[-half:, :] = np.nan
        K[:, :half] = K[:, -half:] = np.nan
    return X, Y, K


def liouville_residual(metric, target_curvature, order=2, shape=(512, 512), region=None):
    """Pointwise ``K~ e^{2u} - K_h - Delta_h u`` on a grid and its max-norm.

    Parameters
    ----------
    target_curvature : float or callable
        Curvature ``K~`` claimed for the metric (callables map ``(n, 2)``
        points to values).
    region : callable, optional
        Boolean mask of points included in the max-norm (for instance to
        cut out atoms or curves where ``u`` is not twice differentiable).
    """
    X, Y, K = gaussian_curvature(metric, shape, order)
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    if callable(target_curvature):
        Kt = np.asarray(target_curvature(pts), dtype=float).reshape(X.shape)
    else:
        Kt = np.full(X.shape, float(target_curvature))
    with np.errstate(all="ignore"):
        e2u = np.exp(2.0 * _u_safe(metric, pts)).reshape(X.shape)
        res = (Kt - K) * e2u  # K e^{2u} = K_h + Delta u
    mask = np.isfinite(res)
    if region is not None:
        mask &= np.asarray(region(pts), dtype=bool).reshape(X.shape)
    res = np.where(mask, res, np.nan)
    max_norm = float(np.nanmax(np.abs(res))) if mask.any() else 0.0
    return LiouvilleReport(X, Y, res, max_norm, K)


def at_infinity_points(metric):
    """Atoms of mass ``> 2 pi`` (at infinity) and ``== 2 pi`` (indeterminate)."""
    out = []
    for s in metric.singular_points():
        if s.mass > TWO_PI + MASS_TOL:
            out.append(InfinityPoint(tuple(s.point), s.mass, "at-infinity", s.finite))
        elif abs(s.mass - TWO_PI) <= MASS_TOL:
            out.append(InfinityPoint(tuple(s.point), s.mass, "indeterminate", s.finite))
    return out


# ---------------------------------------------------------------------------
# lengths


def _classify_endpoint(s: SingularPoint):
    """``("regular", beta)``, ``("tail", sp)`` or raise for unreachable singularities."""
    if s.mass > TWO_PI + MASS_TOL:
        raise InfiniteLengthError(f"point {s.point} carries mass {s.mass:.6g} > 2*pi (at infinity)", s.point)
    if abs(s.mass - TWO_PI) <= MASS_TOL:
        if s.finite is None:
            raise IndeterminateSingularityError(
                f"point {s.point} carries mass exactly 2*pi; finiteness undecided", s.point
            )
        if not s.finite:
            raise InfiniteLengthError(f"point {s.point} is at infinite distance", s.point)
        if s.tail is None:
            raise IndeterminateSingularityError(f"no radial tail declared for the cusp at {s.point}", s.point)
        return "tail", s
    return "regular", -s.mass / TWO_PI


def _curve(bg, A, B, t):
    """Points ``gamma(t)`` on the background segment A->B and the speed there."""
    t = np.asarray(t, dtype=float)
    if bg.kind == "sphere":
        c = (1 - t)[..., None] * A[..., None, :] + t[..., None] * B[..., None, :]
        rho2 = (c * c).sum(axis=-1)
        cross = np.linalg.norm(np.cross(A, B), axis=-1)
        return c / np.sqrt(rho2)[..., None], cross[..., None] / rho2
    pts = A[..., None, :] + t[..., None] * (B - A)[..., None, :]
    speed = np.linalg.norm(B - A, axis=-1)[..., None]
    return pts, np.broadcast_to(speed, pts.shape[:-1])


def _segment_length(metric, A, B, sA, sB, order, pieces):
    """Length of one background segment whose singular points are only at its ends."""
    bg = metric.background
    total = 0.0
    grid = np.linspace(0.0, 1.0, pieces + 1)
    for k in range(pieces):
        a, b = grid[k], grid[k + 1]
        left = sA if k == 0 else None
        right = sB if k == pieces - 1 else None
        PA = _curve(bg, A, B, np.array([a]))[0][0]
        PB = _curve(bg, A, B, np.array([b]))[0][0]
        total += _piece_length(metric, PA, PB, left, right, order)
    return total


def _piece_length(metric, A, B, left, right, order):
    bg = metric.background
    kinds = [None if s is None else _classify_endpoint(s) for s in (left, right)]
    if any(k is not None and k[0] == "tail" for k in kinds):
        if kinds[0] is not None and kinds[0][0] == "tail":
            if kinds[1] is not None:
                mid = _curve(bg, A, B, np.array([0.5]))[0][0]
                return _piece_length(metric, A, mid, left, None, order) + _piece_length(
                    metric, mid, B, None, right, order
                )
            return _tail_length(metric, A, B, left, order)
        return _piece_length(metric, B, A, right, left, order)
    beta = kinds[0][1] if kinds[0] is not None else 0.0
    alpha = kinds[1][1] if kinds[1] is not None else 0.0
    if alpha == 0.0 and beta == 0.0:
        t, w = quadrature.gauss_legendre(order, 0.0, 1.0)
        pts, speed = _curve(bg, A, B, t)
        return float(w @ (np.exp(metric.u(pts)) * speed))
    n = max(order, SINGULAR_ORDER)
    t, w = quadrature.gauss_jacobi_unit(n, alpha, beta)
    pts, speed = _curve(bg, A, B, t)
    # divide out the model singularity carried by the Jacobi weight
    g = np.exp(metric.u(pts)) * speed / (t ** beta * (1 - t) ** alpha)
    return float(w @ g)


def _tail_length(metric, A, B, sp, order, n_log=24):
    """Radial piece leaving a finite-distance cusp at ``A``.

    The declared tail covers ``[0, r0]``; the rest is integrated in ``log r``
    where the cusp integrand is smooth.
    """
    bg = metric.background
    if bg.kind == "sphere":
        raise InvalidArgumentError("cusp tails are supported on planar charts only")
    L = float(np.linalg.norm(B - A))
    r0 = 1e-3 * L
    s, w = quadrature.gauss_legendre(n_log, np.log(r0), np.log(L))
    r = np.exp(s)
    pts = A + (r / L)[:, None] * (B - A)
    return float(sp.tail_fn()(r0) + w @ (np.exp(metric.u(pts)) * r))


def _on_segment(bg, A, B, P, tol=1e-12):
    """Parameter of ``P`` on the segment A->B, or None."""
    if bg.kind == "sphere":
        n = np.cross(A, B)
        nn = np.linalg.norm(n)
        if nn < tol or abs(P @ n) > tol * nn:
            return None
        ang = np.arctan2(nn, A @ B)
        ap = np.arctan2(np.linalg.norm(np.cross(A, P)), A @ P)
        pb = np.arctan2(np.linalg.norm(np.cross(P, B)), P @ B)
        if abs(ap + pb - ang) > 1e-10:
            return None
        # parameter of the chord point that projects to P
        return float(np.tan(ap) / (np.tan(ap) + np.tan(pb))) if ap + pb > 0 else 0.0
    d = B - A
    L2 = d @ d
    t = float((P - A) @ d / L2) if L2 > 0 else 0.0
    if t < -tol or t > 1 + tol:
        return None
    if np.linalg.norm(A + t * d - P) > tol * max(1.0, np.sqrt(L2)):
        return None
    return min(max(t, 0.0), 1.0)


def length(metric: ConformalMetric, polyline, order=8, pieces=None):
    """Length of a polyline (great-circle arcs on the sphere) in the metric.

    Segments are split at singular points lying on them. Pieces ending at a
    singular point of mass ``< 2 pi`` use a Gauss-Jacobi rule absorbing the
    model singularity ``r^(-m / 2 pi)``; pieces ending at a mass ``> 2 pi`` raise
    :class:`InfiniteLengthError`; mass exactly ``2 pi`` needs a declared radial
    tail (finite cusp) and raises otherwise.
    """
    bg = metric.background
    P = np.atleast_2d(np.asarray(polyline, dtype=float))
    if P.shape[0] < 2:
        return 0.0
    if bg.kind == "sphere":
        P = P / np.linalg.norm(P, axis=1, keepdims=True)
    sing = metric.singular_points()
    spts = [np.asarray(s.point, dtype=float) for s in sing]
    total = 0.0
    for A, B in zip(P[:-1], P[1:]):
        hits = []
        for s, sp in zip(sing, spts):
            t = _on_segment(bg, A, B, sp)
            if t is not None:
                hits.append((t, s))
        hits.sort(key=lambda h: h[0])
        cuts = [(0.0, None)] + hits + [(1.0, None)]
        # merge singular points at the ends with the cut markers
        if len(hits) and hits[0][0] == 0.0:
            cuts = cuts[1:]
        if len(hits) and hits[-1][0] == 1.0:
            cuts = cuts[:-1]
        for (ta, sa), (tb, sb) in zip(cuts[:-1], cuts[1:]):
            if tb - ta <= 0.0:
                continue
            PA = _curve(bg, A, B, np.array([ta]))[0][0]
            PB = _curve(bg, A, B, np.array([tb]))[0][0]
            seg = float(bg.geodesic(PA, PB))
            n_p = pieces or max(1, int(np.ceil(seg / 0.05)))
            total += _segment_length(metric, PA, PB, sa, sb, order, n_p)
    return metric.scale * total


# ---------------------------------------------------------------------------
# graphs


@dataclass(frozen=True, eq=False)
class MetricGraph:
    """Weighted graph discretising a conformal metric at one refinement level."""

    positions: np.ndarray
    adjacency: object
    level: int
    blocked: np.ndarray  # nodes with every arc removed (singular points at infinity)
    periodic: bool = False
    _tree: dict = field(default_factory=dict, repr=False)

    @property
    def n_nodes(self):
        return self.positions.shape[0]

    def max_arc(self):
        return float(self.adjacency.data.max()) if self.adjacency.nnz else 0.0

    def snap(self, points):
        """Indices of the nodes closest to ``points`` and the snapping offsets."""
        if "tree" not in self._tree:
            if self.periodic:
                self._tree["tree"] = cKDTree(np.mod(self.positions, 1.0) % 1.0, boxsize=1.0)
            else:
                self._tree["tree"] = cKDTree(self.positions)
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.periodic:
            pts = np.mod(pts, 1.0) % 1.0
        d, idx = self._tree["tree"].query(pts)
        return idx, d


def _exponents(metric, n_nodes, sing_nodes):
    """Per-node model exponent ``-m / 2 pi`` and classification of singular nodes."""
    beta = np.zeros(n_nodes)
    blocked = np.zeros(n_nodes, dtype=bool)
    tails = {}
    for node, s in sing_nodes:
        try:
            kind, val = _classify_endpoint(s)
        except InfiniteLengthError:
            blocked[node] = True
            continue
        if kind == "tail":
            tails[node] = val
        else:
            beta[node] = val
    return beta, blocked, tails


def _arc_weights(metric, A, B, beta_a, beta_b, ufunc, order=ARC_ORDER):
    """Quadrature of ``e^u`` along background segments ``A[i] -> B[i]``.

    ``ufunc(points, arc_ids, t)`` returns ``u`` at curve points; the ids
    and parameters let callers interpolate face-wise data.
    """
    bg = metric.background
    n = A.shape[0]
    w_out = np.empty(n)
    key = np.stack([beta_a, beta_b], axis=1)
    regular = (beta_a == 0.0) & (beta_b == 0.0)
    groups = [(np.flatnonzero(regular), 0.0, 0.0)]
    if not regular.all():
        uniq = np.unique(key[~regular], axis=0)
        for ba, bb in uniq:
            groups.append((np.flatnonzero((beta_a == ba) & (beta_b == bb) & ~regular), ba, bb))
    for ids, ba, bb in groups:
        if ids.size == 0:
            continue
        if ba == 0.0 and bb == 0.0:
            t, w = quadrature.gauss_legendre(order, 0.0, 1.0)
            corr = np.ones_like(t)
        else:
            t, w = quadrature.gauss_jacobi_unit(SINGULAR_ORDER, bb, ba)
            corr = 1.0 / (t ** ba * (1 - t) ** bb)
        pts, speed = _curve(bg, A[ids], B[ids], t)
        u = ufunc(pts.reshape(-1, pts.shape[-1]), np.repeat(ids, t.size), np.tile(t, ids.size))
        vals = np.exp(u.reshape(ids.size, t.size)) * speed * corr
        w_out[ids] = vals @ w
    return w_out


def _tail_weights(metric, A, B, tails, ia, ib):
    """Arcs leaving a finite cusp (mass exactly 2 pi with a declared tail)."""
    out = np.empty(A.shape[0])
    for k in range(A.shape[0]):
        if ia[k] in tails:
            out[k] = _tail_length(metric, A[k], B[k], tails[ia[k]], ARC_ORDER)
        else:
            out[k] = _tail_length(metric, B[k], A[k], tails[ib[k]], ARC_ORDER)
    return out


def _insert_singular_vertices(vertices, faces, points, periodic=False):
    """Move the nearest vertex onto each singular point; returns node ids."""
    vertices = vertices.copy()
    taken = {}
    ids = []
    if len(points) == 0:
        return vertices, ids
    tree = cKDTree(vertices, boxsize=1.0 if periodic else None)
    for p in points:
        p = np.asarray(p, dtype=float)
        q = np.mod(p, 1.0) % 1.0 if periodic else p
        for kk in (1, 4, 8):
            d, cand = tree.query(q, k=kk)
            for c in np.atleast_1d(cand):
                if int(c) not in taken:
                    break
            else:
                continue
            break
        c = int(c)
        taken[c] = True
        vertices[c] = q
        ids.append(c)
    return vertices, ids


def sphere_graph(metric, level, steiner_points=DEFAULT_STEINER):
    """Icosphere graph: vertices moved onto singular points, ``steiner_points`` per edge.

    Arcs join face-local points on different sides (and neighbours along a
    side) by great-circle arcs; the weight is a Gauss rule for ``e^u`` along
    the arc, Gauss-Jacobi when an end is a singular point. The atomic part of
    ``u`` is exact at every quadrature point; the diffuse part is computed at
    the mesh vertices and interpolated barycentrically.
    """
    key = ("sphere", int(level), int(steiner_points))
    if key in metric._cache:
        return metric._cache[key]
    V, F = meshes.icosphere(level)
    sing = metric.singular_points()
    spts = [np.asarray(s.point, dtype=float) / np.linalg.norm(s.point) for s in sing]
    V, sids = _insert_singular_vertices(V, F, spts)
    g = _face_graph(metric, V, F, None, sids, sing, level, steiner_points)
    metric._cache[key] = g
    return g


def torus_graph(metric, level, steiner_points=DEFAULT_STEINER):
    """Periodic grid graph of the unit torus with ``10 * 2**level`` cells per side."""
    key = ("torus", int(level), int(steiner_points))
    if key in metric._cache:
        return metric._cache[key]
    n = 10 * 2 ** int(level)
    V, F, corners = meshes.torus_grid(n)
    sing = metric.singular_points()
    spts = [np.asarray(s.point, dtype=float) for s in sing]
    V2, sids = _insert_singular_vertices(V, F, spts, periodic=True)
    disp = V2 - V
    disp -= np.floor(disp + 0.5)
    corners = corners + disp[F]
    g = _face_graph(metric, V2, F, corners, sids, sing, level, steiner_points)
    metric._cache[key] = g
    return g


def _diffuse_vertex_values(metric, V):
    """Part of ``u`` interpolated from vertices (everything except exact atoms)."""
    if metric.kind != "measure":
        return None
    diffuse = metric.measure.diffuse_part()
    if diffuse.is_empty:
        return np.zeros(V.shape[0])
    return green.potential(metric.background, diffuse, V, check=False)


def _atomic_u(metric, pts):
    u = np.full(pts.shape[0], metric.offset)
    for a in metric.measure.atoms:
        p = np.asarray(a.point, dtype=float)
        with np.errstate(divide="ignore"):
            if metric.background.kind == "sphere":
                hc = 0.5 * np.linalg.norm(pts - p / np.linalg.norm(p), axis=1)
                g = -green.INV_2PI * np.log(hc) + green.SPHERE_C0
            else:
                D = pts - p
                D -= np.floor(D + 0.5)
                from . import _backend

                g = _backend.torus_green_exact(D)
        u += a.mass * g
    return u


def _face_graph(metric, V, F, corners, sids, sing, level, s):
    bg = metric.background
    k = int(s)
    pairs, bary = steiner.face_template(k)
    nodes, edges, _ = steiner.face_local_nodes(F, k, V.shape[0])
    if corners is None:
        corners = V[F]  # (F, 3, d)
    local = np.einsum("lc,fcd->fld", bary, corners)
    if bg.kind == "sphere":
        local /= np.linalg.norm(local, axis=2, keepdims=True)
    n_nodes = V.shape[0] + k * edges.shape[0]
    pos = np.zeros((n_nodes, V.shape[1]))
    pos[nodes.ravel()] = local.reshape(-1, V.shape[1])
    if bg.kind == "torus":
        pos = np.mod(pos, 1.0) % 1.0
    sing_nodes = list(zip(sids, sing))
    beta, blocked, tails = _exponents(metric, n_nodes, sing_nodes)

    u_vert = _diffuse_vertex_values(metric, V)
    ia = nodes[:, pairs[:, 0]].ravel()
    ib = nodes[:, pairs[:, 1]].ravel()
    fid = np.repeat(np.arange(F.shape[0]), pairs.shape[0])
    A = local[:, pairs[:, 0], :].reshape(-1, V.shape[1])
    B = local[:, pairs[:, 1], :].reshape(-1, V.shape[1])
    ba_ = bary[pairs[:, 0]]
    bb_ = bary[pairs[:, 1]]
    arc_ba = np.tile(ba_, (F.shape[0], 1))
    arc_bb = np.tile(bb_, (F.shape[0], 1))
    keep = ~(blocked[ia] | blocked[ib])
    tail_arc = np.array([(a in tails) or (b in tails) for a, b in zip(ia, ib)]) if tails else np.zeros(ia.size, bool)
    reg = keep & ~tail_arc
    ids_reg = np.flatnonzero(reg)

    def ufunc(pts, arc_ids, t):
        gids = ids_reg[arc_ids]
        if metric.kind == "measure":
            lam = (1 - t)[:, None] * arc_ba[gids] + t[:, None] * arc_bb[gids]
            fv = u_vert[F[fid[gids]]]
            return _atomic_u(metric, pts) + (lam * fv).sum(axis=1)
        return metric.u(pts)

    w = np.full(ia.size, np.inf)
    w[ids_reg] = _arc_weights(metric, A[ids_reg], B[ids_reg], beta[ia[ids_reg]], beta[ib[ids_reg]], ufunc)
    if tails:
        ids_t = np.flatnonzero(keep & tail_arc)
        w[ids_t] = _tail_weights(metric, A[ids_t], B[ids_t], tails, ia[ids_t], ib[ids_t])
    mat = steiner.assemble(n_nodes, ia, ib, w)
    return MetricGraph(pos, mat, int(level), blocked, periodic=bg.kind == "torus")


def farey_stencil(order):
    """Primitive lattice directions ``(a, b)`` with ``max(|a|, |b|) <= order``, one per +/- pair."""
    out = []
    for a in range(0, order + 1):
        for b in range(-order, order + 1):
            if (a, b) == (0, 0) or math.gcd(a, abs(b)) != 1:
                continue
            if a == 0 and b < 0:
                continue
            out.append((a, b))
    return np.array(out, dtype=np.int64)


def plane_graph(metric, level, stencil=DEFAULT_STENCIL):
    """Lattice graph of the declared chart rectangle, ``10 * 2**level + 1`` nodes per side.

    Every node is joined to the nodes reached by primitive lattice steps of
    size at most ``stencil``; the segments stay inside the rectangle. Primitive
    steps never pass through other lattice nodes, so singular points on the
    lattice only occur at arc ends. Off-lattice singular points are added as
    extra nodes joined to every lattice node within two cells.
    """
    key = ("plane", int(level), int(stencil))
    if key in metric._cache:
        return metric._cache[key]
    if metric.domain is None:
        raise InvalidArgumentError("plane distances need a declared compact domain")
    x0, x1, y0, y1 = metric.domain
    N = 10 * 2 ** int(level) + 1
    xs = np.linspace(x0, x1, N)
    ys = np.linspace(y0, y1, N)
    hx, hy = xs[1] - xs[0], ys[1] - ys[0]
    I, J = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    I, J = I.ravel(), J.ravel()
    pos = np.stack([xs[I], ys[J]], axis=1)
    n_lat = pos.shape[0]
    ia_l, ib_l = [], []
    for a, b in farey_stencil(stencil):
        I2, J2 = I + a, J + b
        ok = (I2 >= 0) & (I2 < N) & (J2 >= 0) & (J2 < N)
        ia_l.append((I * N + J)[ok])
        ib_l.append((I2 * N + J2)[ok])
    ia = np.concatenate(ia_l)
    ib = np.concatenate(ib_l)

    sing = metric.singular_points()
    snodes = []
    extra = []
    for s in sing:
        p = np.asarray(s.point, dtype=float)
        if not (x0 <= p[0] <= x1 and y0 <= p[1] <= y1):
            continue
        i = int(round((p[0] - x0) / hx))
        j = int(round((p[1] - y0) / hy))
        if abs(xs[i] - p[0]) < 1e-12 * max(1, abs(p[0])) and abs(ys[j] - p[1]) < 1e-12 * max(1, abs(p[1])):
            snodes.append((i * N + j, s))
        else:
            extra.append(s)
    if extra:
        tree = cKDTree(pos)
        new_pos = [pos]
        for e, s in enumerate(extra):
            nid = n_lat + e
            p = np.asarray(s.point, dtype=float)
            nb = tree.query_ball_point(p, 2.0 * max(hx, hy))
            ia = np.concatenate([ia, np.full(len(nb), nid)])
            ib = np.concatenate([ib, np.asarray(nb, dtype=np.int64)])
            new_pos.append(p[None])
            snodes.append((nid, s))
        pos = np.concatenate(new_pos)
    n_nodes = pos.shape[0]
    beta, blocked, tails = _exponents(metric, n_nodes, snodes)
    keep = ~(blocked[ia] | blocked[ib])
    tail_arc = np.isin(ia, list(tails)) | np.isin(ib, list(tails)) if tails else np.zeros(ia.size, bool)
    reg = np.flatnonzero(keep & ~tail_arc)
    A, B = pos[ia], pos[ib]

    if metric.kind == "measure":
        diffuse = metric.measure.diffuse_part()
        if diffuse.is_empty:
            lat_u = None
        else:
            vals = green.potential(metric.background, diffuse, pos[:n_lat], check=False)
            lat_u = GridPotential(x0, x1, y0, y1, vals.reshape(N, N).T)

        def ufunc(pts, arc_ids, t):
            u = _plane_atomic_u(metric, pts)
            if lat_u is not None:
                u = u + lat_u(pts)
            return u
    else:

        def ufunc(pts, arc_ids, t):
            return metric.u(pts)

    w = np.full(ia.size, np.inf)
    w[reg] = _arc_weights(metric, A[reg], B[reg], beta[ia[reg]], beta[ib[reg]], ufunc)
    if tails:
        ids_t = np.flatnonzero(keep & tail_arc)
        w[ids_t] = _tail_weights(metric, A[ids_t], B[ids_t], tails, ia[ids_t], ib[ids_t])
    mat = steiner.assemble(n_nodes, ia, ib, w)
    g = MetricGraph(pos, mat, int(level), blocked)
    metric._cache[key] = g
    return g


def _plane_atomic_u(metric, pts):
    u = np.full(pts.shape[0], metric.offset)
    for a in metric.measure.atoms:
        with np.errstate(divide="ignore"):
            u += a.mass * (-green.INV_2PI) * np.log(np.linalg.norm(pts - np.asarray(a.point), axis=1))
    return u


def graph(metric, level, **kw):
    """Graph of ``metric`` at ``level`` for its background."""
    kind = metric.background.kind
    if kind == "sphere":
        return sphere_graph(metric, level, **kw)
    if kind == "torus":
        return torus_graph(metric, level, **kw)
    return plane_graph(metric, level, **kw)


def _check_endpoints(metric, points):
    bg = metric.background
    for ip in at_infinity_points(metric):
        p = np.asarray(ip.point, dtype=float)
        if bg.kind == "sphere":
            p = p / np.linalg.norm(p)
        near = bg.chord(points, p) < 1e-9
        if not np.any(near):
            continue
        if ip.status == "at-infinity" or ip.declared_finite is False:
            raise InfiniteLengthError(f"endpoint {tuple(p)} is a point at infinity", tuple(p))
        if ip.declared_finite is None:
            raise IndeterminateSingularityError(
                f"endpoint {tuple(p)} carries mass exactly 2*pi; finiteness undecided", tuple(p)
            )


def _prepare(metric, points):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if metric.background.kind == "sphere":
        pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    if metric.background.kind == "plane" and metric.domain is not None:
        x0, x1, y0, y1 = metric.domain
        tol = 1e-12
        if np.any((pts[:, 0] < x0 - tol) | (pts[:, 0] > x1 + tol) | (pts[:, 1] < y0 - tol) | (pts[:, 1] > y1 + tol)):
            raise InvalidArgumentError("query point outside the declared plane domain")
    _check_endpoints(metric, pts)
    return pts


def _attach_plane_points(metric, g, pts):
    """Adjacency with every query point that is not a lattice node added as a node.

    A query node is joined to the lattice nodes within two cells (and to other
    query nodes that close), so the distance is not perturbed by snapping.
    """
    idx, off = g.snap(pts)
    loose = np.flatnonzero(off > 1e-12)
    if loose.size == 0:
        return g.adjacency, idx
    hx = (metric.domain[1] - metric.domain[0]) / (10 * 2 ** g.level)
    hy = (metric.domain[3] - metric.domain[2]) / (10 * 2 ** g.level)
    radius = 2.0 * max(hx, hy)
    sing = np.array([sp.point for sp in metric.singular_points()], dtype=float).reshape(-1, 2)
    tree = g._tree["tree"]
    ia, ib, A, B = [], [], [], []
    new_ids = {}
    for q in loose:
        # repeated query points share a node
        key = tuple(pts[q])
        if key in new_ids:
            idx[q] = new_ids[key]
            continue
        nid = g.n_nodes + len(new_ids)
        new_ids[key] = nid
        idx[q] = nid
        nb = [j for j in tree.query_ball_point(pts[q], radius) if not g.blocked[j]]
        if sing.size:
            near_sing = np.min(np.linalg.norm(g.positions[nb][:, None, :] - sing[None], axis=-1), axis=1) < 1e-12
            nb = [j for j, bad in zip(nb, near_sing) if not bad]
        ia += [nid] * len(nb)
        ib += nb
        A += [pts[q]] * len(nb)
        B += [g.positions[j] for j in nb]
    qpos = np.array(list(new_ids.keys()), dtype=float)
    qid = np.array(list(new_ids.values()), dtype=np.int64)
    for a in range(len(qid)):
        for b in range(a + 1, len(qid)):
            if np.linalg.norm(qpos[a] - qpos[b]) <= radius:
                ia.append(qid[a])
                ib.append(qid[b])
                A.append(qpos[a])
                B.append(qpos[b])
    ia = np.array(ia, dtype=np.int64)
    ib = np.array(ib, dtype=np.int64)
    A = np.array(A, dtype=float).reshape(-1, 2)
    B = np.array(B, dtype=float).reshape(-1, 2)
    zero = np.zeros(ia.size)
    w = _arc_weights(metric, A, B, zero, zero, lambda p, i, t: metric.u(p))
    base = g.adjacency.tocoo()
    n = g.n_nodes + len(new_ids)
    mat = steiner.assemble(n, np.concatenate([base.row, ia]), np.concatenate([base.col, ib]),
                           np.concatenate([base.data, w]))
    return mat, idx


def _query_graph(metric, pts, level, **kw):
    g = graph(metric, level, **kw)
    if metric.background.kind == "plane":
        g.snap(pts[:1])  # builds the KD tree
        return _attach_plane_points(metric, g, pts)
    idx, _ = g.snap(pts)
    return g.adjacency, idx


def node_distances(metric, points, level, **kw):
    """Distances (times ``scale``) from the query points to every graph node.

    Plane query points off the lattice are inserted as extra nodes; on the
    sphere and torus they are snapped to the nearest node.
    """
    pts = _prepare(metric, points)
    mat, idx = _query_graph(metric, pts, level, **kw)
    return metric.scale * steiner.shortest_paths(mat, idx), idx, mat


def distance_table(metric, points, level=4, **kw):
    """Symmetric matrix of graph distances between ``points``."""
    D, idx, _ = node_distances(metric, points, level, **kw)
    T = D[:, idx]
    T = np.minimum(T, T.T)
    np.fill_diagonal(T, 0.0)
    if not np.all(np.isfinite(T)):
        raise UnreachableError("some sample points are not connected in the metric graph")
    return T


def distance(metric, p, q, refinement_level=4, **kw):
    """Graph upper bound for the distance between ``p`` and ``q``."""
    pts = _prepare(metric, np.stack([np.asarray(p, float), np.asarray(q, float)]))
    mat, idx = _query_graph(metric, pts, refinement_level, **kw)
    if idx[0] == idx[1]:
        return 0.0
    d = steiner.shortest_paths(mat, [idx[0]])[0, idx[1]]
    if not np.isfinite(d):
        raise UnreachableError(f"no path between {tuple(p)} and {tuple(q)}")
    return float(metric.scale * d)


def snap_error_bound(metric, level, **kw):
    """Largest arc weight of the graph: distance error allowed by node snapping."""
    return metric.scale * graph(metric, level, **kw).max_arc()


__all__ = [
    "ConformalMetric",
    "GridPotential",
    "SingularPoint",
    "InfinityPoint",
    "MetricGraph",
    "LiouvilleReport",
    "from_measure",
    "closed_form",
    "from_grid",
    "check_admissible",
    "classify_construct",
    "curvature_of",
    "gaussian_curvature",
    "liouville_residual",
    "at_infinity_points",
    "length",
    "graph",
    "sphere_graph",
    "torus_graph",
    "plane_graph",
    "farey_stencil",
    "node_distances",
    "distance_table",
    "distance",
    "snap_error_bound",
]
