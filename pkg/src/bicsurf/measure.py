"""Signed curvature measures in three-part normal form.

A :class:`SignedMeasure` is a finite sum of

* atoms ``m * delta_p`` (angular defects, radians),
* curve parts ``k(s) ds`` along polylines or circles (radians per unit length),
* absolutely continuous parts ``K dA`` (radians per unit background area).

Measures are immutable. Construction normalises: atoms closer than
``ATOM_MERGE_TOL`` are merged, absolutely continuous parts with the same shape
key are summed, and zero coefficients are dropped, so that algebraic
identities such as ``(w - A) + A == w`` hold exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import quadrature
from .errors import (
    InvalidArgumentError,
    InvalidMeasureError,
    InvalidTestFunctionError,
)

ATOM_MERGE_TOL = 1e-12
TWO_PI = 2.0 * np.pi

# ---------------------------------------------------------------------------
# densities along curves


@dataclass(frozen=True)
class ConstDensity:
    value: float

    def __call__(self, s):
        return np.full(np.shape(s), float(self.value))

    @property
    def key(self):
        return ("const", float(self.value))

    def scaled(self, c):
        return ConstDensity(c * self.value)

    def positive(self):
        return ConstDensity(max(self.value, 0.0))

    def negative(self):
        return ConstDensity(max(-self.value, 0.0))

    def to_json(self):
        return {"kind": "const", "value": float(self.value)}


@dataclass(frozen=True, eq=False)
class ExprDensity:
    """Density given as an expression (or callable) of the arclength ``s``."""

    expr: str
    func: Callable = field(repr=False, default=None)
    coefficient: float = 1.0

    def __post_init__(self):
        if self.func is None:
            object.__setattr__(self, "func", compile_expression(self.expr, ("s",)))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return self.coefficient * np.broadcast_to(np.asarray(self.func(s), dtype=float), s.shape)

    @property
    def key(self):
        return ("expr", self.expr, float(self.coefficient))

    def __eq__(self, other):
        return isinstance(other, ExprDensity) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def scaled(self, c):
        return ExprDensity(self.expr, self.func, c * self.coefficient)

    def positive(self):
        f = self
        return ExprDensity(f"pos({f.expr})*{f.coefficient!r}", lambda s: np.maximum(f(s), 0.0))

    def negative(self):
        f = self
        return ExprDensity(f"neg({f.expr})*{f.coefficient!r}", lambda s: np.maximum(-f(s), 0.0))

    def to_json(self):
        return {"kind": "expr", "expr": self.expr, "coefficient": float(self.coefficient)}


def compile_expression(expr, variables):
    """Compile a numeric expression string into a vectorised function.

    The expression is parsed with sympy (no Python ``eval`` of raw input) and
    lambdified against numpy.
    """
    import sympy

    syms = sympy.symbols(variables)
    try:
        parsed = sympy.sympify(expr, locals={v: s for v, s in zip(variables, syms)})
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise InvalidArgumentError(f"cannot parse expression {expr!r}: {exc}") from exc
    free = {str(s) for s in parsed.free_symbols}
    if not free <= set(variables):
        raise InvalidArgumentError(f"expression {expr!r} uses unknown symbols {sorted(free - set(variables))}")
    return sympy.lambdify(syms, parsed, modules="numpy")


# ---------------------------------------------------------------------------
# curve parts


@dataclass(frozen=True, eq=False)
class CurvePart:
    """Density along a polyline or an exact circle.

    Exactly one of ``polyline`` (``(n, d)`` array) or ``circle``
    (``(center, radius, normal)``; ``normal`` ignored in 2D) is set.
    Arclength ``s`` starts at the first polyline vertex, or at
    ``center + radius * e1`` for circles.
    """

    density: ConstDensity | ExprDensity
    polyline: np.ndarray | None = None
    circle: tuple | None = None
    order: int = 8

    def __post_init__(self):
        if (self.polyline is None) == (self.circle is None):
            raise InvalidArgumentError("curve part needs exactly one of polyline or circle")
        if self.polyline is not None:
            pl = np.array(self.polyline, dtype=float)
            if pl.ndim != 2 or pl.shape[0] < 2 or not np.all(np.isfinite(pl)):
                raise InvalidMeasureError("polyline must be a finite (n>=2, d) array")
            pl.setflags(write=False)
            object.__setattr__(self, "polyline", pl)
        else:
            center, radius, *rest = self.circle
            normal = tuple(rest[0]) if rest and rest[0] is not None else None
            center = tuple(float(c) for c in center)
            if not (np.isfinite(radius) and radius > 0):
                raise InvalidMeasureError("circle radius must be positive and finite")
            object.__setattr__(self, "circle", (center, float(radius), normal))

    def length(self):
        if self.circle is not None:
            return TWO_PI * self.circle[1]
        return float(np.linalg.norm(np.diff(self.polyline, axis=0), axis=1).sum())

    def _circle_map(self, s):
        center, radius, normal = self.circle
        c = np.asarray(center)
        ang = np.asarray(s) / radius
        if c.size == 2:
            return c + radius * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        e1, e2, _ = quadrature.orthonormal_frame(normal if normal is not None else (0, 0, 1))
        return c + radius * (np.cos(ang)[:, None] * e1 + np.sin(ang)[:, None] * e2)

    def quadrature(self):
        """Return ``(points, s, ds_weights)`` of the composite Gauss rule."""
        if self.circle is not None:
            n_seg = 64
            L = self.length()
            edges = np.linspace(0.0, L, n_seg + 1)
            x, w = quadrature.gauss_legendre(self.order, 0.0, 1.0)
            h = np.diff(edges)
            s = (edges[:-1, None] + h[:, None] * x[None, :]).ravel()
            ws = (h[:, None] * w[None, :]).ravel()
            return self._circle_map(s), s, ws
        pl = self.polyline
        seg = np.diff(pl, axis=0)
        seglen = np.linalg.norm(seg, axis=1)
        start = np.concatenate([[0.0], np.cumsum(seglen)[:-1]])
        x, w = quadrature.gauss_legendre(self.order, 0.0, 1.0)
        pts = (pl[:-1, None, :] + x[None, :, None] * seg[:, None, :]).reshape(-1, pl.shape[1])
        s = (start[:, None] + seglen[:, None] * x[None, :]).ravel()
        ws = (seglen[:, None] * w[None, :]).ravel()
        return pts, s, ws

    @property
    def geometry_key(self):
        if self.circle is not None:
            return ("circle", self.circle)
        return ("polyline", self.polyline.tobytes(), self.polyline.shape)

    def same_as(self, other):
        return (
            isinstance(other, CurvePart)
            and self.geometry_key == other.geometry_key
            and self.density == other.density
        )

    def scaled(self, c):
        return CurvePart(self.density.scaled(c), self.polyline, self.circle, self.order)

    def with_density(self, density):
        return CurvePart(density, self.polyline, self.circle, self.order)


# ---------------------------------------------------------------------------
# absolutely continuous parts


@dataclass(frozen=True)
class SphereDomain:
    """Unit sphere with a product quadrature (see :func:`quadrature.sphere_rule`)."""

    n_theta: int = 128
    n_phi: int = 256
    axis: tuple = (0.0, 0.0, 1.0)
    pole_exponent: float = 0.0

    def rule(self):
        return quadrature.sphere_rule(self.n_theta, self.n_phi, self.axis, self.pole_exponent)

    def area(self):
        return 4.0 * np.pi


@dataclass(frozen=True)
class DiscDomain:
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    n_r: int = 64
    n_phi: int = 128
    radial: str = "linear"

    def rule(self):
        return quadrature.disc_rule(self.center, self.radius, self.n_r, self.n_phi, self.radial)

    def area(self):
        return np.pi * self.radius ** 2


@dataclass(frozen=True)
class RectDomain:
    """Axis-aligned rectangle with an ``ny x nx`` midpoint rule (flat torus: unit square)."""

    x0: float = 0.0
    x1: float = 1.0
    y0: float = 0.0
    y1: float = 1.0
    nx: int = 256
    ny: int = 256

    def rule(self):
        pts, a = quadrature.rect_midpoints(self.x0, self.x1, self.y0, self.y1, self.nx, self.ny)
        return pts, np.full(pts.shape[0], a)

    def area(self):
        return (self.x1 - self.x0) * (self.y1 - self.y0)


@dataclass(frozen=True, eq=False)
class FieldDensity:
    """``coefficient * f(x) dA`` on a domain, ``f`` given by an expression or callable.

    ``expr`` doubles as the identity of ``f``: two parts with equal ``expr``
    and domain are merged by adding coefficients. ``expr == "1"`` is the
    background area measure.
    """

    expr: str
    domain: SphereDomain | DiscDomain | RectDomain
    func: Callable = field(repr=False, default=None)
    coefficient: float = 1.0

    def __post_init__(self):
        if self.func is None:
            variables = ("x", "y", "z") if isinstance(self.domain, SphereDomain) else ("x", "y")
            f = compile_expression(self.expr, variables)
            object.__setattr__(self, "func", lambda p, _f=f: _f(*p.T))

    def density(self, points):
        points = np.asarray(points, dtype=float)
        vals = np.asarray(self.func(points), dtype=float)
        return self.coefficient * np.broadcast_to(vals, points.shape[:1]).astype(float)

    def quadrature(self):
        """Return ``(points, area_weights, density_values)``."""
        pts, w = self.domain.rule()
        return pts, w, self.density(pts)

    @property
    def shape_key(self):
        return ("field", self.expr, self.domain)

    def scaled(self, c):
        return FieldDensity(self.expr, self.domain, self.func, c * self.coefficient)

    def positive(self):
        f = self
        return FieldDensity(
            f"pos({self.expr})*{self.coefficient!r}", self.domain, lambda p: np.maximum(f.density(p), 0.0)
        )

    def negative(self):
        f = self
        return FieldDensity(
            f"neg({self.expr})*{self.coefficient!r}", self.domain, lambda p: np.maximum(-f.density(p), 0.0)
        )

    def same_as(self, other):
        return (
            isinstance(other, FieldDensity)
            and self.shape_key == other.shape_key
            and self.coefficient == other.coefficient
        )


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Cell-centred samples on a planar rectangle, integrated by the midpoint rule."""

    x0: float
    x1: float
    y0: float
    y1: float
    values: np.ndarray  # shape (ny, nx)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2:
            raise InvalidMeasureError("grid density values must be 2D (ny, nx)")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def quadrature(self):
        ny, nx = self.values.shape
        pts, a = quadrature.rect_midpoints(self.x0, self.x1, self.y0, self.y1, nx, ny)
        return pts, np.full(pts.shape[0], a), self.values.ravel()

    @property
    def shape_key(self):
        return ("grid", self.x0, self.x1, self.y0, self.y1, self.values.shape)

    @property
    def coefficient(self):
        return 1.0

    def scaled(self, c):
        return GridDensity(self.x0, self.x1, self.y0, self.y1, c * self.values)

    def positive(self):
        return GridDensity(self.x0, self.x1, self.y0, self.y1, np.maximum(self.values, 0.0))

    def negative(self):
        return GridDensity(self.x0, self.x1, self.y0, self.y1, np.maximum(-self.values, 0.0))

    def same_as(self, other):
        return (
            isinstance(other, GridDensity)
            and self.shape_key == other.shape_key
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class CapDensity:
    """Mass spread uniformly on a geodesic disc (sphere) or Euclidean disc (plane)."""

    center: tuple
    radius: float
    mass: float
    n_r: int = 32
    n_phi: int = 64

    @property
    def on_sphere(self):
        return len(self.center) == 3

    def area(self):
        if self.on_sphere:
            return TWO_PI * (1.0 - np.cos(self.radius))
        return np.pi * self.radius ** 2

    def quadrature(self):
        if self.on_sphere:
            t, wt = quadrature.gauss_legendre(self.n_r, 0.0, self.radius)
            wt = wt * np.sin(t)
            phi = (np.arange(self.n_phi) + 0.5) * (TWO_PI / self.n_phi)
            pts = quadrature._frame_points(t, phi, np.asarray(self.center))
            w = np.repeat(wt * (TWO_PI / self.n_phi), self.n_phi)
        else:
            pts, w = quadrature.disc_rule(self.center, self.radius, self.n_r, self.n_phi)
        dens = np.full(pts.shape[0], self.mass / self.area())
        return pts, w, dens

    @property
    def shape_key(self):
        return ("cap", tuple(self.center), float(self.radius), self.n_r, self.n_phi)

    @property
    def coefficient(self):
        return self.mass

    def scaled(self, c):
        return CapDensity(self.center, self.radius, c * self.mass, self.n_r, self.n_phi)

    def positive(self):
        return self.scaled(1.0) if self.mass > 0 else self.scaled(0.0)

    def negative(self):
        return self.scaled(-1.0) if self.mass < 0 else self.scaled(0.0)

    def same_as(self, other):
        return isinstance(other, CapDensity) and self == other


@dataclass(frozen=True, eq=False)
class ZonalDensity:
    """``coefficient * f(z) dA`` on the unit sphere, ``z = <p, axis>``.

    Integrals run over the polar angle ``theta`` from ``axis``.
    ``exponents = (p, q)`` declare the behaviour ``f sin(theta) ~ theta^p``
    near ``theta = 0`` and ``(pi - theta)^q`` near ``theta = pi``; a
    Gauss-Jacobi rule in ``theta`` absorbs them.
    """

    expr: str
    axis: tuple = (0.0, 0.0, 1.0)
    exponents: tuple = (0.0, 0.0)
    n_z: int = 128
    n_phi: int = 256
    coefficient: float = 1.0
    func: Callable = field(default=None, repr=False)

    def __post_init__(self):
        ax = np.asarray(self.axis, dtype=float)
        object.__setattr__(self, "axis", tuple(float(c) for c in ax / np.linalg.norm(ax)))
        object.__setattr__(self, "exponents", tuple(float(e) for e in self.exponents))
        if self.func is None:
            f = compile_expression(self.expr, ("z",))
            object.__setattr__(self, "func", lambda z, _f=f: np.asarray(_f(z), dtype=float))

    def profile(self, z):
        z = np.asarray(z, dtype=float)
        return self.coefficient * np.broadcast_to(self.func(z), z.shape).astype(float)

    def density(self, points):
        return self.profile(np.asarray(points, dtype=float) @ np.asarray(self.axis))

    def theta_rule(self):
        """Nodes and weights for ``int_0^pi g(theta) dtheta`` with ``g ~ theta^p, (pi-theta)^q``."""
        p, q = self.exponents
        t, w = quadrature.gauss_jacobi_unit(self.n_z, q, p)
        theta = np.pi * t
        return theta, np.pi * w / (t ** p * (1.0 - t) ** q)

    def quadrature(self):
        theta, wt = self.theta_rule()
        wz = wt * np.sin(theta)
        phi = (np.arange(self.n_phi) + 0.5) * (TWO_PI / self.n_phi)
        pts = quadrature._frame_points(theta, phi, np.asarray(self.axis))
        w = np.repeat(wz * (TWO_PI / self.n_phi), self.n_phi)
        return pts, w, self.density(pts)

    @property
    def shape_key(self):
        return ("zonal", self.expr, self.axis, self.exponents, self.n_z, self.n_phi)

    def scaled(self, c):
        return replace(self, coefficient=c * self.coefficient)

    def positive(self):
        f = self
        return ZonalDensity(
            f"pos({self.expr})*{self.coefficient!r}", self.axis, self.exponents, self.n_z, self.n_phi,
            func=lambda z: np.maximum(f.profile(z), 0.0),
        )

    def negative(self):
        f = self
        return ZonalDensity(
            f"neg({self.expr})*{self.coefficient!r}", self.axis, self.exponents, self.n_z, self.n_phi,
            func=lambda z: np.maximum(-f.profile(z), 0.0),
        )

    def same_as(self, other):
        return (
            isinstance(other, ZonalDensity)
            and self.shape_key == other.shape_key
            and self.coefficient == other.coefficient
        )


AcPart = FieldDensity | GridDensity | CapDensity | ZonalDensity


def _merge_ac(parts):
    merged: dict = {}
    order = []
    for p in parts:
        k = p.shape_key
        if k in merged:
            q = merged[k]
            if isinstance(p, GridDensity):
                merged[k] = GridDensity(p.x0, p.x1, p.y0, p.y1, q.values + p.values)
            elif isinstance(p, CapDensity):
                merged[k] = replace(p, mass=q.mass + p.mass)
            elif isinstance(p, ZonalDensity):
                merged[k] = replace(p, coefficient=q.coefficient + p.coefficient)
            else:
                merged[k] = FieldDensity(p.expr, p.domain, p.func, q.coefficient + p.coefficient)
        else:
            merged[k] = p
            order.append(k)
    out = []
    for k in order:
        p = merged[k]
        if isinstance(p, GridDensity):
            if np.any(p.values != 0.0):
                out.append(p)
        elif p.coefficient != 0.0:
            out.append(p)
    return tuple(out)


# ---------------------------------------------------------------------------
# the measure


@dataclass(frozen=True)
class Atom:
    point: tuple
    mass: float


def _merge_atoms(atoms):
    pts = []
    for a in atoms:
        p = np.asarray(a.point, dtype=float)
        if not np.isfinite(a.mass) or not np.all(np.isfinite(p)):
            raise InvalidMeasureError(f"non-finite atom {a}")
        pts.append(p)
    if not pts:
        return ()
    if len({p.shape for p in pts}) > 1:
        raise InvalidMeasureError("atoms of one measure must share a dimension")
    P = np.stack(pts)
    masses = np.array([float(a.mass) for a in atoms])
    # each unclaimed atom, in input order, claims every unclaimed atom within the tolerance
    tree = cKDTree(P)
    rep = np.full(len(P), -1)
    for i in range(len(P)):
        if rep[i] >= 0:
            continue
        near = np.asarray(tree.query_ball_point(P[i], ATOM_MERGE_TOL * (1 - 1e-12)), dtype=int)
        near = near[rep[near] < 0]
        rep[near] = i
    heads = np.flatnonzero(rep == np.arange(len(P)))
    total = {int(i): 0.0 for i in heads}
    for j, r in enumerate(rep):
        total[int(r)] += masses[j]
    return tuple(Atom(tuple(float(c) for c in P[i]), total[int(i)]) for i in heads if total[int(i)] != 0.0)


@dataclass(frozen=True)
class SignedMeasure:
    """Curvature measure: atoms + curve parts + absolutely continuous parts.

    ``carrier`` names the surface or chart the measure lives on
    (``"sphere"``, ``"plane"``, ``"torus"``, ``"mesh:<name>"``, ...).
    """

    carrier: str
    atoms: tuple = ()
    curves: tuple = ()
    ac: tuple = ()

    def __post_init__(self):
        atoms = tuple(a if isinstance(a, Atom) else Atom(tuple(a[0]), float(a[1])) for a in self.atoms)
        object.__setattr__(self, "atoms", _merge_atoms(atoms))
        object.__setattr__(self, "curves", tuple(self.curves))
        object.__setattr__(self, "ac", _merge_ac(tuple(self.ac)))

    # -- algebra ---------------------------------------------------------
    def _check(self, other):
        if not isinstance(other, SignedMeasure):
            return NotImplemented
        if other.carrier != self.carrier:
            raise InvalidArgumentError(f"carrier mismatch: {self.carrier!r} vs {other.carrier!r}")
        return None

    def __add__(self, other):
        bad = self._check(other)
        if bad is NotImplemented:
            return bad
        return SignedMeasure(
            self.carrier, self.atoms + other.atoms, self.curves + other.curves, self.ac + other.ac
        )

    def __neg__(self):
        return self.scaled(-1.0)

    def __sub__(self, other):
        bad = self._check(other)
        if bad is NotImplemented:
            return bad
        return self + (-other)

    def __mul__(self, c):
        if isinstance(c, (int, float, np.floating)):
            return self.scaled(float(c))
        return NotImplemented

    __rmul__ = __mul__

    def scaled(self, c):
        return SignedMeasure(
            self.carrier,
            tuple(Atom(a.point, c * a.mass) for a in self.atoms),
            tuple(cp.scaled(c) for cp in self.curves) if c != 0 else (),
            tuple(p.scaled(c) for p in self.ac),
        )

    def equals(self, other):
        """Structural (symbolic) equality of all three parts."""
        if not isinstance(other, SignedMeasure) or self.carrier != other.carrier:
            return False
        if len(self.atoms) != len(other.atoms) or len(self.curves) != len(other.curves):
            return False
        if len(self.ac) != len(other.ac):
            return False
        for a in self.atoms:
            if not any(a == b for b in other.atoms):
                return False
        for c in self.curves:
            if not any(c.same_as(d) for d in other.curves):
                return False
        for p in self.ac:
            if not any(p.same_as(q) for q in other.ac):
                return False
        return True

    # -- views -----------------------------------------------------------
    @property
    def is_empty(self):
        return not (self.atoms or self.curves or self.ac)

    @property
    def is_atomic(self):
        return not (self.curves or self.ac)

    def atom_points(self):
        if not self.atoms:
            return np.empty((0, 0))
        return np.array([a.point for a in self.atoms], dtype=float)

    def atom_masses(self):
        return np.array([a.mass for a in self.atoms], dtype=float)

    def atomic_part(self):
        return SignedMeasure(self.carrier, self.atoms)

    def diffuse_part(self):
        return SignedMeasure(self.carrier, (), self.curves, self.ac)


def zero_measure(carrier):
    return SignedMeasure(carrier)


def area_measure(carrier="sphere", domain=None, density=1.0):
    """``density * dA`` on the background (round unit sphere by default)."""
    if domain is None:
        if carrier == "sphere":
            domain = SphereDomain()
        elif carrier == "torus":
            domain = RectDomain()
        else:
            raise InvalidArgumentError(f"no default area domain for carrier {carrier!r}")
    return SignedMeasure(carrier, ac=(FieldDensity("1", domain, coefficient=float(density)),))


# ---------------------------------------------------------------------------
# operations


def _finite_or_raise(vals, what):
    vals = np.asarray(vals, dtype=float)
    if not np.all(np.isfinite(vals)):
        raise InvalidMeasureError(f"non-finite samples in {what}")
    return vals


def _curve_integral(cp, f=None):
    pts, s, ws = cp.quadrature()
    dens = _finite_or_raise(cp.density(s), "curve density")
    if f is None:
        return float(ws @ dens)
    return float(ws @ (dens * _eval_f(f, pts)))


def _ac_integral(part, f=None):
    pts, w, dens = part.quadrature()
    dens = _finite_or_raise(dens, "absolutely continuous density")
    if f is None:
        if isinstance(part, CapDensity):
            return float(part.mass)
        return float(w @ dens)
    return float(w @ (dens * _eval_f(f, pts)))


def _eval_f(f, pts):
    try:
        vals = np.asarray(f(pts), dtype=float)
    except Exception as exc:  # user callables can fail arbitrarily
        raise InvalidTestFunctionError(f"test function failed: {exc}") from exc
    vals = np.broadcast_to(vals, pts.shape[:1])
    if not np.all(np.isfinite(vals)):
        raise InvalidTestFunctionError("test function returned non-finite values")
    return vals


def total_mass(mu):
    """``mu(S)``: sum of atoms plus quadrature of curve and area parts."""
    total = float(sum(a.mass for a in mu.atoms))
    total += sum(_curve_integral(cp) for cp in mu.curves)
    total += sum(_ac_integral(p) for p in mu.ac)
    return total


def total_variation(mu):
    plus, minus = jordan_split(mu)
    return total_mass(plus) + total_mass(minus)


def jordan_split(mu):
    """Return ``(mu_plus, mu_minus)``, both non-negative, with ``mu = mu_plus - mu_minus``.

    The split is componentwise: atom signs, curve and area densities pointwise.
    """
    plus_atoms = tuple(a for a in mu.atoms if a.mass > 0)
    minus_atoms = tuple(Atom(a.point, -a.mass) for a in mu.atoms if a.mass < 0)
    plus_curves = []
    minus_curves = []
    for cp in mu.curves:
        d = cp.density
        if isinstance(d, ConstDensity):
            (plus_curves if d.value > 0 else minus_curves).append(
                cp if d.value > 0 else cp.scaled(-1.0)
            )
        else:
            plus_curves.append(cp.with_density(d.positive()))
            minus_curves.append(cp.with_density(d.negative()))
    plus_ac = []
    minus_ac = []
    for p in mu.ac:
        sign = _constant_sign(p)
        if sign > 0:
            plus_ac.append(p)
        elif sign < 0:
            minus_ac.append(p.scaled(-1.0))
        else:
            plus_ac.append(p.positive())
            minus_ac.append(p.negative())
    return (
        SignedMeasure(mu.carrier, plus_atoms, tuple(plus_curves), tuple(plus_ac)),
        SignedMeasure(mu.carrier, minus_atoms, tuple(minus_curves), tuple(minus_ac)),
    )


def _constant_sign(part):
    """+1 / -1 when the density has that sign on every quadrature node, else 0."""
    if isinstance(part, CapDensity):
        return 1 if part.mass > 0 else -1
    _, _, dens = part.quadrature()
    dens = np.asarray(dens, dtype=float)
    if np.all(dens >= 0):
        return 1
    if np.all(dens <= 0):
        return -1
    return 0


def gauss_bonnet_residual(mu, euler_char):
    """``mu(S) - 2 pi chi``."""
    return total_mass(mu) - TWO_PI * int(euler_char)


def integrate(mu, f):
    """``int f dmu``; ``f`` maps an ``(n, d)`` point array to ``n`` values."""
    total = 0.0
    if mu.atoms:
        total += float(mu.atom_masses() @ _eval_f(f, mu.atom_points()))
    total += sum(_curve_integral(cp, f) for cp in mu.curves)
    total += sum(_ac_integral(p, f) for p in mu.ac)
    return total


def max_atom(mu):
    """Largest positive atom mass (0 without positive atoms)."""
    return max((a.mass for a in mu.atoms if a.mass > 0), default=0.0)


# ---------------------------------------------------------------------------
# weak distance


@dataclass(frozen=True)
class TestFunctionSet:
    """Finite family of bounded Lipschitz fields (Lipschitz <= 1, sup <= 1).

    The bound is with respect to the ambient Euclidean distance of the
    carrier coordinates; on the unit sphere that is the chordal distance,
    which is dominated by the geodesic one.
    """

    __test__ = False  # not a pytest class

    functions: tuple
    names: tuple = ()

    def __len__(self):
        return len(self.functions)


_BUMP_LIP = 4.0 / np.sqrt(3.0) * (2.0 / 3.0)  # max |d/dt (1 - t^2)^2| on [0, 1]


def bump(center, radius):
    """Smooth compactly supported bump normalised to Lipschitz 1 and sup <= 1."""
    c = np.asarray(center, dtype=float)
    amp = min(radius / _BUMP_LIP, 1.0)

    def f(p):
        t = np.linalg.norm(np.asarray(p, dtype=float) - c, axis=-1) / radius
        return amp * np.where(t < 1.0, (1.0 - t * t) ** 2, 0.0)

    return f


def fibonacci_sphere(n):
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = np.pi * (1.0 + 5.0 ** 0.5) * i
    r = np.sqrt(1.0 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def default_test_functions(carrier="sphere", bbox=None, n_centers=48, radii=(0.35, 0.7, 1.4)):
    """Bumps on a point lattice plus coordinate and quadratic fields.

    ``carrier="sphere"`` places centres on a Fibonacci lattice of the unit
    sphere; any other carrier uses a square lattice over ``bbox``
    (``(x0, x1, y0, y1)``). Polynomial fields are rescaled so that both
    bounds hold on the sphere / bbox.
    """
    funcs = []
    names = []
    if carrier == "sphere":
        centers = fibonacci_sphere(n_centers)
        for r in radii:
            for k, c in enumerate(centers):
                funcs.append(bump(c, r))
                names.append(f"bump[r={r},c={k}]")
        for axis in range(3):
            funcs.append(lambda p, a=axis: np.asarray(p)[:, a])
            names.append(f"coord{axis}")
        funcs.append(lambda p: 0.5 * (np.asarray(p)[:, 0] ** 2 - np.asarray(p)[:, 1] ** 2))
        names.append("quad_xy")
        funcs.append(lambda p: 0.5 * np.asarray(p)[:, 0] * np.asarray(p)[:, 2])
        names.append("quad_xz")
        funcs.append(lambda p: (3 * np.asarray(p)[:, 2] ** 2 - 1) / 6.0)
        names.append("zonal2")
    else:
        if bbox is None:
            raise InvalidArgumentError("planar carriers need a bounding box for the test set")
        x0, x1, y0, y1 = bbox
        side = int(np.ceil(np.sqrt(n_centers)))
        xs = np.linspace(x0, x1, side)
        ys = np.linspace(y0, y1, side)
        span = max(x1 - x0, y1 - y0)
        for r in radii:
            rr = r * span / 2.0
            for i, x in enumerate(xs):
                for j, y in enumerate(ys):
                    funcs.append(bump((x, y), rr))
                    names.append(f"bump[r={rr:.4g},c={i},{j}]")
        cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        a = min(1.0, 2.0 / span)
        funcs.append(lambda p: a * (np.asarray(p)[:, 0] - cx))
        names.append("coord0")
        funcs.append(lambda p: a * (np.asarray(p)[:, 1] - cy))
        names.append("coord1")
    return TestFunctionSet(tuple(funcs), tuple(names))


def integrate_many(mu, fs: Sequence):
    return np.array([integrate(mu, f) for f in fs])


def weak_distance(mu1, mu2, T=None):
    """Empirical bounded-Lipschitz distance ``max_f |int f dmu1 - int f dmu2|``.

    A lower bound on the true bounded-Lipschitz distance; it is never claimed
    to equal it.
    """
    if mu1.carrier != mu2.carrier:
        raise InvalidArgumentError("measures live on different carriers")
    if T is None:
        T = default_test_functions(mu1.carrier)
    if len(T) == 0:
        raise InvalidArgumentError("empty test function set")
    return float(np.max(np.abs(integrate_many(mu1 - mu2, T.functions))))
