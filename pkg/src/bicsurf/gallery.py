"""Worked examples with their analytic curvature measures and reference values.

Every constructor is deterministic and returns a :class:`GalleryItem`; the
analytic curvature is written down from the geometry, never computed from
the discretisation (except for the icosphere, whose curvature *is* its
angle-defect measure).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import conformal, meshes
from .conformal import ConformalMetric, SingularPoint
from .errors import InvalidArgumentError
from .green import PLANE, SPHERE
from .measure import (
    Atom,
    ConstDensity,
    CurvePart,
    DiscDomain,
    FieldDensity,
    SignedMeasure,
    ZonalDensity,
    area_measure,
    total_mass,
)
from .polyhedral import ConeSurface, curvature_measure

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Reference:
    quantity: str
    value: float
    provenance: str  # "analytic", "derived" or "identity"


@dataclass(frozen=True, eq=False)
class PiecewiseSmooth:
    """Surface glued from smooth pieces, described by name and parameters."""

    pieces: tuple
    params: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class GalleryItem:
    """
    Attributes
    ----------
    surface : ConeSurface, ConformalMetric or PiecewiseSmooth
    analytic_curvature : SignedMeasure
    euler_characteristic : int or None
        ``None`` for open charts (no Gauss-Bonnet statement).
    mass_at_infinity : float or None
        Atom carried by the point added when compactifying a plane chart.
    approximation : ConeSurface, optional
        Polyhedral stand-in used for distance queries on piecewise-smooth
        surfaces, or the polyhedral twin of a conformal metric.
    """

    name: str
    surface: object
    analytic_curvature: SignedMeasure
    references: tuple = ()
    euler_characteristic: int | None = None
    mass_at_infinity: float | None = None
    approximation: ConeSurface | None = None
    params: dict = field(default_factory=dict)
    notes: str = ""

    def reference(self, quantity):
        for r in self.references:
            if r.quantity == quantity:
                return r.value
        raise KeyError(quantity)

    def gauss_bonnet_residual(self):
        """``omega(S) (+ mass at infinity) - 2 pi chi``; ``None`` for open charts."""
        if self.euler_characteristic is None:
            return None
        m = total_mass(self.analytic_curvature)
        if self.mass_at_infinity is not None:
            m += self.mass_at_infinity
        return m - TWO_PI * self.euler_characteristic


def _positive(name, **vals):
    for k, v in vals.items():
        if not (np.isfinite(v) and v > 0):
            raise InvalidArgumentError(f"{name}: {k} must be positive, got {v}")


# ---------------------------------------------------------------------------
# polyhedra


def make_cube(a=1.0):
    """Cube of side ``a``, each square face split by a diagonal."""
    _positive("make_cube", a=a)
    P = a * np.array(
        [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]], dtype=float
    )
    quads = [(0, 3, 2, 1), (4, 5, 6, 7), (0, 1, 5, 4), (1, 2, 6, 5), (2, 3, 7, 6), (3, 0, 4, 7)]
    faces = []
    for q in quads:
        faces += [(q[0], q[1], q[2]), (q[0], q[2], q[3])]
    s = ConeSurface.from_positions(P, faces, "cube")
    omega = SignedMeasure(s_carrier(s), tuple(Atom(tuple(p), np.pi / 2) for p in P))
    refs = (
        Reference("vertex_defect", np.pi / 2, "analytic"),
        Reference("total_curvature", 4 * np.pi, "analytic"),
        Reference("face_diagonal_distance", a * np.sqrt(2.0), "derived"),
    )
    return GalleryItem("cube", s, omega, refs, 2, params={"a": float(a)})


def s_carrier(s):
    return f"mesh:{s.name}"


def make_tetrahedron(L=1.0):
    """Regular tetrahedron with all edges ``L``."""
    _positive("make_tetrahedron", L=L)
    P = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) * (L / np.sqrt(8.0))
    faces = meshes.orient_outward(P, np.array([[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]]))
    s = ConeSurface.from_positions(P, faces, "tetrahedron")
    omega = SignedMeasure(s_carrier(s), tuple(Atom(tuple(p), np.pi) for p in P))
    refs = (Reference("vertex_defect", np.pi, "analytic"), Reference("edge_distance", float(L), "derived"))
    return GalleryItem("tetrahedron", s, omega, refs, 2, params={"L": float(L)})


def make_icosphere(k=0):
    """Level-``k`` icosphere with chord edge lengths; curvature = its defect measure."""
    if int(k) != k or k < 0:
        raise InvalidArgumentError("icosphere level must be a non-negative integer")
    V, F = meshes.icosphere(int(k))
    s = ConeSurface.from_positions(V, F, f"icosphere{int(k)}")
    omega = curvature_measure(s)
    refs = (
        Reference("total_curvature", 4 * np.pi, "identity"),
        Reference("round_area", 4 * np.pi, "analytic"),
    )
    return GalleryItem(f"icosphere{int(k)}", s, omega, refs, 2, params={"k": int(k)})


def make_flat_torus(n=10):
    """Flat unit torus from an ``n x n`` square grid with diagonals."""
    V, F, corners = meshes.torus_grid(n)
    lengths = {}
    for f, c in zip(F, corners):
        for i, j in ((0, 1), (1, 2), (2, 0)):
            key = (int(min(f[i], f[j])), int(max(f[i], f[j])))
            lengths[key] = float(np.linalg.norm(c[i] - c[j]))
    s = ConeSurface(len(V), F, lengths, V, "flat_torus")
    omega = SignedMeasure(s_carrier(s))
    return GalleryItem("flat_torus", s, omega, (Reference("area", 1.0, "analytic"),), 0, params={"n": int(n)})


def _lantern_rings(m, n):
    rings = []
    for k in range(m + 1):
        ang = TWO_PI * np.arange(n) / n + (k % 2) * np.pi / n
        rings.append(np.stack([np.cos(ang), np.sin(ang), np.full(n, k / m)], axis=1))
    return rings


def lantern_mesh(m, n, capped=True):
    """Schwarz lantern with ``m`` slices and ``n`` vertices per ring in the unit cylinder."""
    if int(m) != m or int(n) != n or m < 1 or n < 3:
        raise InvalidArgumentError("lantern needs m >= 1 slices and n >= 3 sectors")
    m, n = int(m), int(n)
    P = np.concatenate(_lantern_rings(m, n))
    k = np.arange(m)[:, None]
    j = np.arange(n)[None, :]
    shift = k % 2  # odd rings are rotated forward by half a sector
    lo, lo1 = k * n + j, k * n + (j + 1) % n
    # upper-ring neighbours straddling the lower edge (j, j+1) and lower vertex j
    top = (k + 1) * n + (j + shift) % n
    top_prev = (k + 1) * n + (j - 1 + shift) % n
    up = np.stack([lo, lo1, top], axis=-1).reshape(-1, 3)
    down = np.stack([lo, top, top_prev], axis=-1).reshape(-1, 3)
    faces = np.stack([up, down], axis=1).reshape(-1, 3)
    n_lateral = faces.shape[0]
    if capped:
        c_bot = P.shape[0]
        c_top = c_bot + 1
        P = np.concatenate([P, [[0, 0, 0], [0, 0, 1.0]]])
        j = np.arange(n)
        bot = np.stack([np.full(n, c_bot), (j + 1) % n, j], axis=1)
        cap = np.stack([np.full(n, c_top), m * n + j, m * n + (j + 1) % n], axis=1)
        faces = np.concatenate([faces, bot, cap])
    faces = faces.astype(np.int64)
    return P, faces, n_lateral


def make_lantern(m, n):
    """Capped Schwarz lantern; the reference area is the lateral part only."""
    P, F, n_lat = lantern_mesh(m, n)
    s = ConeSurface.from_positions(P, F, f"lantern{m}x{n}")
    omega = curvature_measure(s)
    refs = (
        Reference("lateral_area", lantern_area(m, n), "derived"),
        Reference("cylinder_lateral_area", TWO_PI, "analytic"),
    )
    return GalleryItem(
        f"lantern{m}x{n}", s, omega, refs, 2, params={"m": int(m), "n": int(n), "n_lateral": n_lat}
    )


def lantern_area(m, n):
    """Lateral area of the Schwarz lantern: Heron's formula on every triangle's edge lengths."""
    P, F, n_lat = lantern_mesh(m, n, capped=False)
    T = P[F[:n_lat]]
    a = np.linalg.norm(T[:, 1] - T[:, 2], axis=1)
    b = np.linalg.norm(T[:, 2] - T[:, 0], axis=1)
    c = np.linalg.norm(T[:, 0] - T[:, 1], axis=1)
    # stable Heron (Kahan): sort a >= b >= c
    a, b, c = np.sort(np.stack([a, b, c]), axis=0)[::-1]
    q = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return float(0.25 * np.sqrt(np.maximum(q, 0.0)).sum())


def lantern_area_closed_form(m, n):
    """``2 n sin(pi/n) sqrt(1 + m^2 (1 - cos(pi/n))^2)``."""
    return 2 * n * np.sin(np.pi / n) * np.sqrt(1.0 + (m * (1.0 - np.cos(np.pi / n))) ** 2)


# ---------------------------------------------------------------------------
# piecewise smooth surfaces


def can_mesh(r, h, n_theta=64, n_h=None, n_r=None):
    """Triangulated can: cylinder band plus two fan-triangulated discs (polar grid)."""
    n_h = n_h or max(2, int(round(n_theta * h / (TWO_PI * r))))
    n_r = n_r or max(2, n_theta // 6)
    ang = TWO_PI * np.arange(n_theta) / n_theta
    ring = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)
    pts = []
    for k in range(n_h + 1):
        pts.append(np.column_stack([ring, np.full(n_theta, h * k / n_h)]))
    for z, sign in ((0.0, -1), (h, 1)):
        for i in range(n_r - 1, 0, -1):
            pts.append(np.column_stack([ring * (i / n_r), np.full(n_theta, z)]))
        pts.append(np.array([[0.0, 0.0, z]]))
    P = np.concatenate(pts)
    faces = []
    for k in range(n_h):
        a0, b0 = k * n_theta, (k + 1) * n_theta
        for j in range(n_theta):
            j1 = (j + 1) % n_theta
            faces += [(a0 + j, a0 + j1, b0 + j1), (a0 + j, b0 + j1, b0 + j)]

    def disc(start_ring, first_inner):
        # rings: start_ring (rim), then n_r - 1 inner rings, then the centre
        idx = [start_ring] + [first_inner + i * n_theta for i in range(n_r - 1)]
        centre = first_inner + (n_r - 1) * n_theta
        out = []
        for a0, b0 in zip(idx[:-1], idx[1:]):
            for j in range(n_theta):
                j1 = (j + 1) % n_theta
                out += [(a0 + j, a0 + j1, b0 + j1), (a0 + j, b0 + j1, b0 + j)]
        a0 = idx[-1]
        for j in range(n_theta):
            out.append((a0 + j, a0 + (j + 1) % n_theta, centre))
        return out

    first_bottom = (n_h + 1) * n_theta
    first_top = first_bottom + (n_r - 1) * n_theta + 1
    faces += disc(0, first_bottom)
    faces += disc(n_h * n_theta, first_top)
    faces = meshes.orient_outward(P - [0, 0, h / 2], np.array(faces, dtype=np.int64))
    return ConeSurface.from_positions(P, faces, "can")


def make_can(r=1.0, h=2.0, n_theta=64):
    """Cylinder of radius ``r`` and height ``h`` closed by two flat discs.

    Curvature lives on the two rims with density ``1/r``. Distances route
    through the polyhedral approximation :func:`can_mesh`.
    """
    _positive("make_can", r=r, h=h)
    rims = tuple(
        CurvePart(ConstDensity(1.0 / r), circle=((0.0, 0.0, z), float(r), (0.0, 0.0, 1.0))) for z in (0.0, float(h))
    )
    omega = SignedMeasure("can", curves=rims)
    surf = PiecewiseSmooth(("disc", "cylinder", "disc"), {"r": float(r), "h": float(h)})
    refs = (
        Reference("total_curvature", 4 * np.pi, "analytic"),
        Reference("rim_density", 1.0 / r, "analytic"),
    )
    return GalleryItem(
        "can", surf, omega, refs, 2, approximation=can_mesh(r, h, n_theta), params={"r": float(r), "h": float(h)}
    )


def cone_pillow(theta, radius=1.0, n_rings=24, n_sectors=48):
    """Two flat cone discs of apex angle ``theta`` glued along their rims.

    Positions are metadata: ``(x, y, sheet)`` with ``(x, y)`` the conformal
    chart coordinate of the cone metric ``|z|^{2 beta} |dz|^2``
    (``|z|^{beta+1}/(beta+1) = rho``, ``arg z = 2 pi psi / theta``), sheet 0
    (top) or 1 (bottom).
    """
    _positive("cone_pillow", theta=theta, radius=radius)
    beta = theta / TWO_PI - 1.0
    rho = radius * np.arange(1, n_rings + 1) / n_rings
    psi = theta * np.arange(n_sectors) / n_sectors
    chart_r = ((beta + 1.0) * rho) ** (1.0 / (beta + 1.0))
    arg = TWO_PI * np.arange(n_sectors) / n_sectors
    pos = [[0.0, 0.0, 0.0]]
    polar = [(0.0, 0.0)]
    for i in range(n_rings):
        for j in range(n_sectors):
            pos.append([chart_r[i] * np.cos(arg[j]), chart_r[i] * np.sin(arg[j]), 0.0])
            polar.append((rho[i], psi[j]))
    top_n = len(pos)
    # bottom sheet: apex + inner rings (the rim is shared)
    pos.append([0.0, 0.0, 1.0])
    polar.append((0.0, 0.0))
    for i in range(n_rings - 1):
        for j in range(n_sectors):
            pos.append([chart_r[i] * np.cos(arg[j]), chart_r[i] * np.sin(arg[j]), 1.0])
            polar.append((rho[i], psi[j]))

    def vid(sheet, ring, j):
        j %= n_sectors
        if ring < 0:
            return 0 if sheet == 0 else top_n
        if sheet == 0 or ring == n_rings - 1:
            return 1 + ring * n_sectors + j
        return top_n + 1 + ring * n_sectors + j

    faces = []
    for sheet in (0, 1):
        for j in range(n_sectors):
            tri = (vid(sheet, -1, 0), vid(sheet, 0, j), vid(sheet, 0, j + 1))
            faces.append(tri if sheet == 0 else tri[::-1])
        for i in range(n_rings - 1):
            for j in range(n_sectors):
                a, b = vid(sheet, i, j), vid(sheet, i, j + 1)
                c, d = vid(sheet, i + 1, j), vid(sheet, i + 1, j + 1)
                for tri in ((a, c, d), (a, d, b)):
                    faces.append(tri if sheet == 0 else tri[::-1])
    polar = np.array(polar)
    lengths = {}
    for f in faces:
        for i, j in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            (r1, p1), (r2, p2) = polar[i], polar[j]
            dpsi = (p1 - p2 + theta / 2) % theta - theta / 2 if theta > 0 else 0.0
            lengths[(min(i, j), max(i, j))] = float(np.sqrt(max(r1 * r1 + r2 * r2 - 2 * r1 * r2 * np.cos(dpsi), 0.0)))
    s = ConeSurface(len(pos), faces, lengths, np.array(pos), f"cone_pillow{theta:.6g}")
    return s


def make_cone(theta=np.pi, domain=1.0, twin=True):
    """Euclidean cone of total angle ``theta`` as the plane metric ``|z|^{2 beta} |dz|^2``.

    ``beta = theta / (2 pi) - 1``; the potential is that of ``(2 pi - theta) delta_0``.
    The twin is :func:`cone_pillow`.
    """
    _positive("make_cone", theta=theta)
    beta = theta / TWO_PI - 1.0
    mass = TWO_PI - theta
    atoms = ((((0.0, 0.0), mass),) if mass != 0.0 else ())
    omega = SignedMeasure("plane", atoms)
    D = float(domain)
    metric = ConformalMetric(PLANE, "measure", measure=omega, domain=(-D, D, -D, D), name="cone")
    refs = (
        Reference("beta", beta, "analytic"),
        Reference("apex_mass", mass, "analytic"),
        Reference("radial_distance_unit", 1.0 / (beta + 1.0), "derived"),
    )
    approx = cone_pillow(theta, radius=(D ** (beta + 1)) / (beta + 1)) if twin else None
    return GalleryItem(
        "cone",
        metric,
        omega,
        refs,
        2,
        mass_at_infinity=theta + TWO_PI,
        approximation=approx,
        params={"theta": float(theta)},
        notes="compactified at infinity with an atom of mass theta + 2 pi (a point at infinity)",
    )


def cone_radial_distance(theta, z0):
    beta = theta / TWO_PI - 1.0
    return float(np.hypot(*z0)) ** (beta + 1.0) / (beta + 1.0)


def make_cusp(a=1.0, half_width=0.625, density_radius=0.9):
    """Cusp metric ``|dz|^2 / (|z|^2 |log|z||^{2a})`` on a square inside the unit disc.

    The origin carries curvature ``2 pi`` and is at finite distance iff
    ``a > 1``. The curvature density ``-a / (r^2 log(r)^2)`` (with respect to
    the chart area) is not integrable up to ``|z| = 1``; the analytic measure
    is recorded on the disc ``|z| <= density_radius``.
    """
    if not (np.isfinite(a) and a >= 0):
        raise InvalidArgumentError("cusp exponent must be >= 0")
    a = float(a)
    expr = f"-log(sqrt(x**2 + y**2)) - {a!r}*log(-log(sqrt(x**2 + y**2)))"
    finite = a > 1.0
    tail = f"(-log(r))**(1 - {a!r})/({a!r} - 1)" if finite else None
    sp = SingularPoint((0.0, 0.0), TWO_PI, finite=finite, tail=tail)
    H = float(half_width)
    metric = ConformalMetric(PLANE, "closed", expr=expr, singular=(sp,), domain=(-H, H, -H, H), name=f"cusp{a:g}")
    ac = ()
    if a != 0.0:
        dens = FieldDensity(
            "1/((x**2 + y**2)*log(sqrt(x**2 + y**2))**2)",
            DiscDomain((0.0, 0.0), float(density_radius), 48, 128, "cusp"),
            coefficient=-a,
        )
        ac = (dens,)
    omega = SignedMeasure("plane", (((0.0, 0.0), TWO_PI),), ac=ac)
    refs = [Reference("origin_mass", TWO_PI, "analytic"), Reference("origin_finite", float(finite), "analytic")]
    if finite:
        refs.append(Reference("distance_origin_half", np.log(2.0) ** (1.0 - a) / (a - 1.0), "derived"))
    return GalleryItem(
        f"cusp{a:g}", metric, omega, tuple(refs), None, params={"a": a},
        notes="open chart of the unit disc; the origin mass 2 pi is decided by the declared finiteness",
    )


def make_glued_discs(r=1.0, domain=3.0):
    """Two flat discs of radius ``r`` glued along their rims (chart density 1 inside, ``|z|^-4`` outside)."""
    _positive("make_glued_discs", r=r)
    expr = "Piecewise((0, x**2 + y**2 <= 1), (-log(x**2 + y**2), True))"
    D = float(domain)
    metric = ConformalMetric(PLANE, "closed", expr=expr, scale=float(r), domain=(-D, D, -D, D), name="glued_discs")
    rim = CurvePart(ConstDensity(2.0), circle=((0.0, 0.0), 1.0, None))
    omega = SignedMeasure("plane", curves=(rim,))
    approx = cone_pillow(TWO_PI, radius=float(r), n_rings=16, n_sectors=48)
    refs = (
        Reference("total_curvature", 4 * np.pi, "analytic"),
        Reference("rim_density", 2.0, "analytic"),
        Reference("density_at_2", 1.0 / 16.0, "analytic"),
    )
    return GalleryItem(
        "glued_discs", metric, omega, refs, 2, mass_at_infinity=0.0, approximation=approx, params={"r": float(r)},
        notes="the point at infinity of the chart is a regular point of the outer disc",
    )


def make_hemisphere_cylinder(domain=2.0):
    """Half of the unit sphere glued to a half-infinite cylinder of radius 1."""
    expr = "Piecewise((log(2) - log(1 + x**2 + y**2), x**2 + y**2 <= 1), (-log(x**2 + y**2)/2, True))"
    D = float(domain)
    metric = ConformalMetric(PLANE, "closed", expr=expr, domain=(-D, D, -D, D), name="hemisphere_cylinder")
    dens = FieldDensity("4/(1 + x**2 + y**2)**2", DiscDomain((0.0, 0.0), 1.0, 64, 128))
    omega = SignedMeasure("plane", ac=(dens,))
    refs = (
        Reference("curvature_inside", 1.0, "analytic"),
        Reference("curvature_outside", 0.0, "analytic"),
        Reference("compactified_total", 4 * np.pi, "analytic"),
    )
    return GalleryItem(
        "hemisphere_cylinder", metric, omega, refs, 2, mass_at_infinity=TWO_PI,
        notes="the point at infinity carries mass exactly 2 pi (a cusp); reported as indeterminate",
    )


def hemisphere_cylinder_density(z):
    r2 = np.sum(np.atleast_2d(z) ** 2, axis=1)
    return np.where(r2 <= 1.0, 4.0 / (1.0 + r2) ** 2, 1.0 / np.where(r2 > 0, r2, 1.0))


# ---------------------------------------------------------------------------
# sphere metrics


def make_round_sphere():
    omega = area_measure("sphere")
    metric = conformal.classify_construct(SPHERE, omega, name="round")
    return GalleryItem("round_sphere", metric, omega, (Reference("antipodal_distance", np.pi, "analytic"),), 2)


def football_density_expr(theta):
    """``e^{2u}`` of the spherical lune of angle ``theta`` as a function of ``z``."""
    b = theta / TWO_PI
    rr = "((1 - z)/(1 + z))"
    return f"{b!r}**2*{rr}**({b!r} - 1)*(2/(1 + z))**2/(1 + {rr}**{b!r})**2"


def make_football(theta=np.pi, axis=(0.0, 0.0, 1.0)):
    """Constant-curvature-1 sphere with two antipodal cone points of angle ``theta``.

    ``omega = (2 pi - theta)(delta_N + delta_S) + e^{2 u} dA`` where ``e^{2u}``
    is the conformal factor of the spherical lune of angle ``theta``. The
    classification fixes the metric up to dilation; the dilation is chosen so
    that the Gaussian curvature equals 1 (checked on the equator), which makes
    the cone points ``pi`` apart.
    """
    if not 0 < theta < TWO_PI:
        raise InvalidArgumentError("football angle must lie in (0, 2 pi)")
    if tuple(axis) != (0.0, 0.0, 1.0):
        raise InvalidArgumentError("football axis is fixed to z")
    b = theta / TWO_PI
    dens = ZonalDensity(football_density_expr(theta), exponents=(2 * b - 1, 2 * b - 1))
    N, S = (0.0, 0.0, 1.0), (0.0, 0.0, -1.0)
    omega = SignedMeasure("sphere", ((N, TWO_PI - theta), (S, TWO_PI - theta)), ac=(dens,))
    raw = conformal.classify_construct(SPHERE, omega)
    ang = TWO_PI * np.arange(8) / 8
    eq = np.stack([np.cos(ang), np.sin(ang), np.zeros(8)], axis=1)
    # curvature 1 means u = log(e^{2u}) / 2 exactly; fix the free constant
    c = float(np.mean(0.5 * np.log(dens.density(eq)) - raw.u(eq)))
    metric = conformal.classify_construct(SPHERE, omega, offset=c, name=f"football{theta:.6g}")
    refs = (
        Reference("cone_point_distance", np.pi, "derived"),
        Reference("area", 2.0 * theta, "derived"),
        Reference("potential_offset", c, "derived"),
    )
    return GalleryItem("football", metric, omega, refs, 2, params={"theta": float(theta)})


def tetrahedral_points():
    P = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    return P / np.sqrt(3.0)


def tetrahedral_rotations():
    """The 12 rotations preserving :func:`tetrahedral_points`."""
    mats = []
    perms = [np.eye(3)[list(p)] for p in ((0, 1, 2), (1, 2, 0), (2, 0, 1))]
    signs = [np.diag(s) for s in ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1))]
    for P in perms:
        for S in signs:
            mats.append(S @ P)
    return np.array(mats)


def make_tetrahedral():
    """Sphere metric with four cone points of angle ``pi`` at a regular tetrahedron."""
    P = tetrahedral_points()
    omega = SignedMeasure("sphere", tuple((tuple(p), np.pi) for p in P))
    metric = conformal.classify_construct(SPHERE, omega, name="tetrahedral")
    return GalleryItem("tetrahedral", metric, omega, (Reference("cone_angle", np.pi, "analytic"),), 2)


CONSTRUCTORS = {
    "cube": make_cube,
    "tetrahedron": make_tetrahedron,
    "icosphere": make_icosphere,
    "flat_torus": make_flat_torus,
    "lantern": make_lantern,
    "can": make_can,
    "glued_discs": make_glued_discs,
    "cone": make_cone,
    "cusp": make_cusp,
    "hemisphere_cylinder": make_hemisphere_cylinder,
    "round_sphere": make_round_sphere,
    "football": make_football,
    "tetrahedral": make_tetrahedral,
}


def make(name, **params):
    try:
        ctor = CONSTRUCTORS[name]
    except KeyError:
        raise InvalidArgumentError(f"unknown gallery item {name!r}; known: {sorted(CONSTRUCTORS)}") from None
    return ctor(**params)
