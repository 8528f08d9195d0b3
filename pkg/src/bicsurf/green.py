"""Green kernels and potentials on the plane, the round sphere and the flat torus.

Sign convention: the Laplacian is ``Delta = -(d_xx + d_yy)`` (and its
Laplace-Beltrami analogue), so each kernel ``G`` satisfies
``Delta_x G(x, .) = delta - 1/area`` on closed backgrounds and
``Delta log_kernel = delta`` on the plane. With this sign the potential of a
positive mass is superharmonic.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _backend, quadrature
from .errors import BalanceViolationError, InvalidArgumentError, SingularEvaluationError
from .measure import (
    CapDensity,
    FieldDensity,
    GridDensity,
    RectDomain,
    SignedMeasure,
    SphereDomain,
    ZonalDensity,
    area_measure,
    total_mass,
)

TWO_PI = 2.0 * np.pi
INV_2PI = 1.0 / TWO_PI
SPHERE_C0 = -1.0 / (4.0 * np.pi)
BALANCE_TOL = 1e-9
ATOM_EXCLUSION = 1e-9


@dataclass(frozen=True)
class BackgroundGeometry:
    """Constant-curvature background: ``"plane"``, ``"sphere"`` (unit) or ``"torus"`` (unit square)."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("plane", "sphere", "torus"):
            raise InvalidArgumentError(f"unknown background {self.kind!r}")

    @property
    def area(self):
        return {"plane": np.inf, "sphere": 4.0 * np.pi, "torus": 1.0}[self.kind]

    @property
    def curvature(self):
        """Gaussian curvature ``K_h`` of the background metric."""
        return 1.0 if self.kind == "sphere" else 0.0

    @property
    def euler_characteristic(self):
        return {"plane": None, "sphere": 2, "torus": 0}[self.kind]

    @property
    def closed(self):
        return self.kind != "plane"

    @property
    def dim(self):
        return 3 if self.kind == "sphere" else 2

    @property
    def carrier(self):
        return self.kind

    def area_measure(self, density=1.0):
        """``density * K``-free area measure ``dA_h`` with the default quadrature."""
        if self.kind == "plane":
            raise InvalidArgumentError("the plane has no finite area measure")
        return area_measure(self.kind, density=density)

    def curvature_measure(self):
        """``K_h dA_h`` (empty for flat backgrounds)."""
        if self.kind == "sphere":
            return self.area_measure()
        return SignedMeasure(self.kind)

    def chord(self, x, y):
        """Distance used for exclusion tests: Euclidean, chordal, or periodic."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        d = x - y
        if self.kind == "torus":
            d = d - np.floor(d + 0.5)
        return np.sqrt((d * d).sum(axis=-1))

    def geodesic(self, x, y):
        """Background geodesic distance (great-circle on the sphere)."""
        if self.kind == "sphere":
            c = self.chord(x, y)
            return 2.0 * np.arcsin(np.clip(0.5 * c, 0.0, 1.0))
        return self.chord(x, y)


PLANE = BackgroundGeometry("plane")
SPHERE = BackgroundGeometry("sphere")
TORUS = BackgroundGeometry("torus")


def background(kind):
    if isinstance(kind, BackgroundGeometry):
        return kind
    return BackgroundGeometry(str(kind))


def _pairs(x, y, d):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    scalar = x.ndim == 1 and y.ndim == 1
    x2, y2 = np.broadcast_arrays(np.atleast_2d(x), np.atleast_2d(y))
    if x2.shape[-1] != d:
        raise InvalidArgumentError(f"expected {d}-dimensional points")
    return x2, y2, scalar


def _out(v, scalar):
    return float(v[0]) if scalar else v


# ---------------------------------------------------------------------------
# kernels


def log_kernel(z, zeta):
    """``-(1/2 pi) log|z - zeta|`` on the plane."""
    z, zeta, scalar = _pairs(z, zeta, 2)
    r = np.linalg.norm(z - zeta, axis=-1)
    if np.any(r == 0.0):
        raise SingularEvaluationError("log kernel evaluated at coincident points")
    return _out(-INV_2PI * np.log(r), scalar)


def green_sphere(x, y):
    """Zero-mean Green kernel of the unit sphere.

    ``G = -(1/2 pi) log sin(d/2) - 1/(4 pi)``, ``d`` the great-circle distance;
    ``sin(d/2)`` is half the chord, which keeps the kernel exactly symmetric.
    """
    x, y, scalar = _pairs(x, y, 3)
    half_chord = 0.5 * np.linalg.norm(x - y, axis=-1)
    if np.any(half_chord == 0.0):
        raise SingularEvaluationError("sphere Green kernel evaluated at coincident points")
    return _out(-INV_2PI * np.log(half_chord) + SPHERE_C0, scalar)


def _torus_offsets(x, y):
    x, y, scalar = _pairs(x, y, 2)
    D = x - y
    D = D - np.floor(D + 0.5)
    if np.any(np.all(D == 0.0, axis=-1)):
        raise SingularEvaluationError("torus Green kernel evaluated at coincident points")
    return D, scalar


def green_torus(x, y, truncation=64, backend=None):
    """Partial Fourier sum of the zero-mean torus Green kernel.

    Sums ``cos(2 pi k.(x-y)) / (4 pi^2 |k|^2)`` over nonzero ``k`` with
    ``max(|k1|, |k2|) <= truncation``.  The sum converges slowly (its
    terms decay like ``|k|^-2``); use :func:`green_torus_exact` when
    accuracy matters.
    """
    if int(truncation) < 1:
        raise InvalidArgumentError("truncation must be >= 1")
    D, scalar = _torus_offsets(x, y)
    s = np.abs(D)  # the sum is even in each coordinate
    return _out(_backend.torus_fourier(s, truncation, backend), scalar)


def green_torus_exact(x, y, backend=None):
    """Limit of :func:`green_torus` as the truncation grows, via theta-function products."""
    D, scalar = _torus_offsets(x, y)
    return _out(_backend.torus_green_exact(D, backend), scalar)


def kernel(bg, x, y, **kw):
    """Dispatch to the kernel of ``bg``."""
    bg = background(bg)
    if bg.kind == "plane":
        return log_kernel(x, y)
    if bg.kind == "sphere":
        return green_sphere(x, y)
    if kw.get("torus_kernel", "exact") == "fourier":
        return green_torus(x, y, kw.get("truncation", 64))
    return green_torus_exact(x, y)


def growth_constant(bg, n=2000, seed=0):
    """Fitted ``C`` with ``|G(x,y)| <= C (1 + |log d(x,y)|)`` on random pairs."""
    bg = background(bg)
    rng = np.random.default_rng(seed)
    if bg.kind == "sphere":
        x = rng.normal(size=(n, 3))
        y = rng.normal(size=(n, 3))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        y /= np.linalg.norm(y, axis=1, keepdims=True)
        # include near-coincident pairs so the log regime is sampled
        t = 10.0 ** rng.uniform(-8, 0, size=n // 2)
        y[: n // 2] = x[: n // 2] + t[:, None] * rng.normal(size=(n // 2, 3))
        y /= np.linalg.norm(y, axis=1, keepdims=True)
    else:
        x = rng.uniform(size=(n, 2))
        y = x + 10.0 ** rng.uniform(-8, -0.4, size=(n, 1)) * rng.normal(size=(n, 2))
    d = bg.geodesic(x, y)
    g = kernel(bg, x, y)
    return float(np.max(np.abs(g) / (1.0 + np.abs(np.log(d)))))


# ---------------------------------------------------------------------------
# potentials


def _as_points(x, d):
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[-1] != d:
        raise InvalidArgumentError(f"expected {d}-dimensional evaluation points")
    return x, scalar


@lru_cache(maxsize=256)
def _sphere_cap_profile(eps):
    """Potential of unit mass spread on a geodesic cap of radius ``eps``.

    Returns ``(k, D, C)`` so that the potential at angle ``t`` from the centre
    is ``2 k log cos(t/2) + D`` inside and ``G(t) + C`` outside.
    """
    A = TWO_PI * (1.0 - np.cos(eps))
    k = 1.0 / A - 1.0 / (4.0 * np.pi)

    def G(t):
        return -INV_2PI * np.log(np.sin(0.5 * t)) + SPHERE_C0

    # continuity at eps (with C = 0), then fix C by the zero-mean condition
    D0 = G(eps) - 2.0 * k * np.log(np.cos(0.5 * eps))
    t_in, w_in = quadrature.gauss_legendre(64, 0.0, eps)
    t_out, w_out = quadrature.gauss_legendre(96, eps, np.pi)
    mean_in = w_in @ ((2.0 * k * np.log(np.cos(0.5 * t_in)) + D0) * np.sin(t_in))
    mean_out = w_out @ (G(t_out) * np.sin(t_out))
    C = -(mean_in + mean_out) / 2.0  # total area 2 pi * 2
    return k, D0 + C, C


def _cap_potential(cap, x, bg):
    if cap.on_sphere:
        if bg.kind != "sphere":
            raise InvalidArgumentError("spherical cap on a non-sphere background")
        c = np.asarray(cap.center, dtype=float)
        c = c / np.linalg.norm(c)
        cos_t = np.clip(x @ c, -1.0, 1.0)
        k, D, C = _sphere_cap_profile(float(cap.radius))
        t = np.arccos(cos_t)
        inside = t < cap.radius
        out = np.empty(x.shape[0])
        out[inside] = 2.0 * k * np.log(np.cos(0.5 * t[inside])) + D
        half_chord = 0.5 * np.linalg.norm(x[~inside] - c, axis=-1)
        out[~inside] = -INV_2PI * np.log(half_chord) + SPHERE_C0 + C
        return cap.mass * out
    if bg.kind != "plane":
        raise InvalidArgumentError("planar caps are supported on the plane background only")
    R = cap.radius
    r = np.linalg.norm(x - np.asarray(cap.center, dtype=float), axis=-1)
    inside = r < R
    out = np.empty(x.shape[0])
    out[~inside] = -INV_2PI * np.log(r[~inside])
    out[inside] = -INV_2PI * (np.log(R) - 0.5 + 0.5 * (r[inside] / R) ** 2)
    return cap.mass * out


def zonal_kernel(z, zp):
    """Azimuthal average of the sphere kernel between heights ``z`` and ``zp``."""
    hi = np.maximum(z, zp)
    lo = np.minimum(z, zp)
    return -0.5 * INV_2PI * np.log(0.25 * (1.0 + hi) * (1.0 - lo)) + SPHERE_C0


def _zonal_potential(part, x, n=64):
    """``int G(x, y) f(y) dA(y)`` for a zonal density, by 1-D rules in the polar angle split at ``x``."""
    p, q = part.exponents
    th = np.arccos(np.clip(x @ np.asarray(part.axis), -1.0, 1.0))
    z = np.cos(th)
    s_lo, w_lo = quadrature.gauss_jacobi_unit(n, 0.0, p)  # weight s^p at theta' = 0
    s_hi, w_hi = quadrature.gauss_jacobi_unit(n, 0.0, q)  # weight s^q at theta' = pi
    lo = th[:, None] * s_lo[None, :]
    wl = w_lo[None, :] * th[:, None] / s_lo[None, :] ** p
    hi = np.pi - (np.pi - th)[:, None] * s_hi[None, :]
    wh = w_hi[None, :] * (np.pi - th)[:, None] / s_hi[None, :] ** q
    out = np.zeros(th.shape)
    for tt, ww in ((lo, wl), (hi, wh)):
        zz = np.cos(tt)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = part.profile(zz) * np.sin(tt) * zonal_kernel(z[:, None], zz)
        out += np.where(ww > 0, ww * vals, 0.0).sum(axis=1)
    return TWO_PI * out


def _covers_closed_surface(part, bg):
    if bg.kind == "sphere":
        return isinstance(part, FieldDensity) and isinstance(part.domain, SphereDomain)
    if bg.kind == "torus":
        if isinstance(part, FieldDensity) and isinstance(part.domain, RectDomain):
            d = part.domain
        elif isinstance(part, GridDensity):
            d = part
        else:
            return False
        return (d.x0, d.x1, d.y0, d.y1) == (0.0, 1.0, 0.0, 1.0)
    return False


def _field_at(part, x):
    if isinstance(part, FieldDensity):
        return part.density(x)
    # nearest-cell value of a grid density (periodic on the torus)
    ny, nx = part.values.shape
    ix = np.floor((x[:, 0] - part.x0) / (part.x1 - part.x0) * nx).astype(int) % nx
    iy = np.floor((x[:, 1] - part.y0) / (part.y1 - part.y0) * ny).astype(int) % ny
    return part.values[iy, ix]


def _diffuse_sum(bg, Y, w, fy, x, fx, backend):
    """``sum_j w_j G(x_i, y_j) (fy_j - fx_i)`` with coincident pairs skipped."""
    if bg.kind == "plane":
        return _backend.plane_log_sum(x, Y, w * fy, backend)
    if bg.kind == "sphere":
        return _backend.sphere_green_sum(x, Y, w, fy, fx, backend)
    return _backend.torus_green_sum(x, Y, w, fy, fx, backend)


def check_balance(bg, mu, tol=BALANCE_TOL):
    """Raise :class:`BalanceViolationError` unless ``mu`` has zero total mass."""
    bg = background(bg)
    if not bg.closed:
        return 0.0
    m = total_mass(mu)
    if abs(m) > tol:
        raise BalanceViolationError(
            f"potential on the {bg.kind} needs a zero-mass measure; total mass is {m:.12g}"
        )
    return m


def check_atom_clearance(bg, mu, x, tol=ATOM_EXCLUSION):
    if not mu.atoms:
        return
    P = mu.atom_points()
    for p in P:
        near = bg.chord(x, p) < tol
        if np.any(near):
            raise SingularEvaluationError(f"potential evaluated within {tol} of the atom at {tuple(p)}")


def potential(bg, mu: SignedMeasure, x, *, check=True, backend=None):
    """``u(x) = int G(x, y) dmu(y)`` with the kernel of ``bg``.

    On closed backgrounds ``mu`` must have total mass 0 (to 1e-9). Atoms and
    geodesic caps are evaluated in closed form; curve parts and densities by
    their declared quadrature. Densities covering the whole closed surface use
    the subtraction ``G * (f(y) - f(x))``, which is exact for the constant
    part thanks to the zero mean of ``G``.

    Parameters
    ----------
    bg : BackgroundGeometry or str
    mu : SignedMeasure
    x : array_like, shape (d,) or (n, d)
    check : bool
        Skip the balance test when False (used internally for parts of a
        balanced measure).
    """
    bg = background(bg)
    x, scalar = _as_points(x, bg.dim)
    if check:
        check_balance(bg, mu)
    check_atom_clearance(bg, mu, x)
    u = np.zeros(x.shape[0])
    for a in mu.atoms:
        u += a.mass * kernel(bg, x, np.asarray(a.point, dtype=float))
    for cp in mu.curves:
        pts, s, ws = cp.quadrature()
        dens = cp.density(s)
        u += _diffuse_sum(bg, pts, ws, dens, x, np.zeros(x.shape[0]), backend)
    for part in mu.ac:
        if isinstance(part, CapDensity):
            u += _cap_potential(part, x, bg)
            continue
        if isinstance(part, ZonalDensity):
            if bg.kind != "sphere":
                raise InvalidArgumentError("zonal densities live on the sphere")
            u += _zonal_potential(part, x)
            continue
        pts, w, dens = part.quadrature()
        fx = _field_at(part, x) if _covers_closed_surface(part, bg) else np.zeros(x.shape[0])
        fx = np.where(np.isfinite(fx), fx, 0.0)  # singular density at x: plain sum
        u += _diffuse_sum(bg, pts, w, dens, x, fx, backend)
    return _out(u, scalar)


def reproduce_smooth(u, lap_u, x, order=64):
    """Right-hand side of ``u(x) = int G(x,y) Delta u(y) dA + mean(u)`` on the unit sphere.

    ``u`` and ``lap_u`` map ``(n, 3)`` points to values. The kernel integral
    uses a rule centred at ``x`` (:func:`quadrature.pole_rule`) so the log
    singularity sits on a quadrature pole.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    X = np.atleast_2d(x)
    X = X / np.linalg.norm(X, axis=1, keepdims=True)
    mp, mw = quadrature.sphere_rule(order, 2 * order)
    mean = (mw @ np.asarray(u(mp), dtype=float)) / (4.0 * np.pi)
    out = np.empty(X.shape[0])
    for i, xi in enumerate(X):
        pts, w = quadrature.pole_rule(xi, order)
        half_chord = 0.5 * np.linalg.norm(pts - xi, axis=1)
        g = -INV_2PI * np.log(half_chord) + SPHERE_C0
        out[i] = w @ (g * np.asarray(lap_u(pts), dtype=float)) + mean
    return _out(out, scalar)


def zero_mean_residual(x, order=64):
    """``int G(x, .) dA`` on the sphere by the pole-centred rule of ``order``."""
    pts, w = quadrature.pole_rule(np.asarray(x, dtype=float), order)
    return float(w @ green_sphere(np.broadcast_to(x, pts.shape), pts))


__all__ = [
    "BackgroundGeometry",
    "PLANE",
    "SPHERE",
    "TORUS",
    "background",
    "log_kernel",
    "green_sphere",
    "green_torus",
    "green_torus_exact",
    "kernel",
    "growth_constant",
    "potential",
    "check_balance",
    "reproduce_smooth",
    "zero_mean_residual",
]
