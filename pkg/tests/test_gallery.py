import numpy as np
import pytest
from numpy.testing import assert_allclose

from bicsurf import conformal as C
from bicsurf import gallery
from bicsurf.errors import InvalidArgumentError
from bicsurf.measure import total_mass
from bicsurf.polyhedral import (
    cone_angles,
    curvature_measure,
    euler_characteristic,
    vertex_defects,
    vertex_distances,
)


def exact_cone_distance(theta, z1, z2):
    """Unfold the cone: planar distance if the developed angle is below pi, else through the apex."""
    b = theta / (2 * np.pi)
    r1, r2 = np.hypot(*z1), np.hypot(*z2)
    rho1, rho2 = r1**b / b, r2**b / b
    dphi = abs(np.arctan2(z1[1], z1[0]) - np.arctan2(z2[1], z2[0]))
    dphi = min(dphi, 2 * np.pi - dphi)
    ang = b * dphi
    if ang >= np.pi:
        return rho1 + rho2
    return np.sqrt(rho1**2 + rho2**2 - 2 * rho1 * rho2 * np.cos(ang))


# -- polyhedra --------------------------------------------------------------------


@pytest.mark.parametrize("a", [1.0, 5.0])
def test_cube_defects(a):
    item = gallery.make_cube(a)
    assert_allclose(vertex_defects(item.surface), np.pi / 2, rtol=0, atol=1e-12)
    assert abs(item.gauss_bonnet_residual()) < 1e-12


def test_cube_rejects_bad_side():
    with pytest.raises(InvalidArgumentError):
        gallery.make_cube(-1.0)


def test_icosahedron_atoms():
    mu = gallery.make_icosphere(0).analytic_curvature
    assert len(mu.atoms) == 12
    # five equilateral angles meet at each vertex
    assert_allclose(mu.atom_masses(), 2 * np.pi - 5 * np.pi / 3, rtol=1e-12)
    assert_allclose(total_mass(mu), 4 * np.pi, rtol=1e-13)


def test_icosphere_defects_shrink():
    peaks = []
    for k in range(5):
        mu = gallery.make_icosphere(k).analytic_curvature
        assert_allclose(total_mass(mu), 4 * np.pi, rtol=1e-12)
        peaks.append(mu.atom_masses().max())
    assert np.all(np.diff(peaks) < 0)


def test_tetrahedron_item():
    item = gallery.make_tetrahedron(2.0)
    assert_allclose(cone_angles(item.surface), np.pi, rtol=1e-14)
    assert abs(item.gauss_bonnet_residual()) < 1e-12


# -- lanterns --------------------------------------------------------------------


@pytest.mark.parametrize("m,n", [(1, 3), (4, 4), (7, 12), (32, 16)])
def test_lantern_area_closed_form(m, n):
    assert_allclose(gallery.lantern_area(m, n), gallery.lantern_area_closed_form(m, n), rtol=1e-13)


def test_lantern_square_family():
    assert abs(gallery.lantern_area(64, 64) / (2 * np.pi) - 1) < 0.01
    assert abs(gallery.lantern_area(128, 128) / (2 * np.pi) - 1) < 0.01


def test_lantern_cubic_family():
    ratios = [gallery.lantern_area(m**3, m) / (2 * np.pi) for m in (3, 4, 8, 16)]
    assert ratios[0] > 10
    assert np.all(np.diff(ratios) > 0)  # area grows without bound along the family


def test_lantern_defects_and_gauss_bonnet():
    item = gallery.make_lantern(6, 8)
    s = item.surface
    d = vertex_defects(s)
    n_lat = 7 * 8
    interior = np.arange(8, n_lat - 8)
    # four base angles and two apex angles of congruent triangles: 2 (2 alpha + gamma) = 2 pi
    assert np.max(np.abs(d[interior])) < 1e-12
    rims = np.r_[0:8, n_lat - 8 : n_lat]
    assert np.all(np.abs(d[rims]) > 0.1)
    assert_allclose(d[rims].sum() + d[n_lat:].sum(), 4 * np.pi, rtol=1e-12)
    assert euler_characteristic(s) == 2
    assert abs(item.gauss_bonnet_residual()) < 1e-9


def test_lantern_rejects_bad_sizes():
    with pytest.raises(InvalidArgumentError):
        gallery.make_lantern(0, 8)
    with pytest.raises(InvalidArgumentError):
        gallery.lantern_area(3, 2)


# -- piecewise smooth items ----------------------------------------------------------


@pytest.mark.parametrize("r", [0.5, 1.0, 3.0])
def test_can(r):
    item = gallery.make_can(r, 2.0)
    mu = item.analytic_curvature
    assert not mu.atoms and not mu.ac and len(mu.curves) == 2
    assert all(c.density.value == 1 / r for c in mu.curves)
    assert_allclose(total_mass(mu), 4 * np.pi, rtol=0, atol=1e-9)
    assert abs(item.gauss_bonnet_residual()) < 1e-9


def test_can_approximation_curvature():
    s = gallery.make_can(1.0, 2.0).approximation
    assert euler_characteristic(s) == 2
    # the approximating mesh concentrates its curvature on the rims
    mu = curvature_measure(s)
    z = mu.atom_points()[:, 2]
    on_rim = np.isclose(z, 0) | np.isclose(z, 2)
    rim_mass = mu.atom_masses()[on_rim].sum()
    assert_allclose(rim_mass, total_mass(mu), rtol=1e-9)
    assert_allclose(total_mass(mu), 4 * np.pi, rtol=1e-12)


def test_glued_discs():
    item = gallery.make_glued_discs(1.0)
    mu = item.analytic_curvature
    assert not mu.atoms
    assert_allclose(total_mass(mu), 4 * np.pi, rtol=1e-12)
    assert_allclose(item.surface.conformal_factor(np.array([2.0, 0.0])), 1 / 16, rtol=1e-14)
    assert abs(item.gauss_bonnet_residual()) < 1e-9


def test_cone_item():
    item = gallery.make_cone(np.pi)
    assert item.reference("beta") == -0.5
    (atom,) = item.analytic_curvature.atoms
    assert atom.mass == np.pi and atom.point == (0.0, 0.0)
    assert abs(item.gauss_bonnet_residual()) < 1e-12
    flat = gallery.make_cone(2 * np.pi, twin=False)
    assert flat.analytic_curvature.is_empty


def test_cone_reference_distance():
    assert_allclose(gallery.cone_radial_distance(np.pi, (0.64, 0.0)), 0.8 / 0.5 * 1.0, rtol=1e-14)
    assert_allclose(gallery.cone_radial_distance(3 * np.pi, (2.0, 0.0)), 2**1.5 / 1.5, rtol=1e-14)


def test_cone_pillow_twin():
    theta = np.pi
    item = gallery.make_cone(theta)
    pillow = item.approximation
    assert np.allclose(np.sort(vertex_defects(pillow))[-2:], 2 * np.pi - theta)
    pos = pillow.positions
    r = np.hypot(pos[:, 0], pos[:, 1])
    cand = np.flatnonzero((pos[:, 2] == 0) & (r > 0.2) & (r < 0.8))
    rng = np.random.default_rng(0)
    pick = np.sort(rng.choice(cand, size=8, replace=False))
    D_pillow = vertex_distances(pillow, pick, 6)[:, pick]
    Z = pos[pick, :2]
    D_metric = C.distance_table(item.surface, Z, 5)
    exact = np.array([[exact_cone_distance(theta, a, b) for b in Z] for a in Z])
    iu = np.triu_indices(8, 1)
    assert np.max(np.abs(D_pillow[iu] / D_metric[iu] - 1)) < 0.01
    assert np.max(np.abs(D_pillow[iu] / exact[iu] - 1)) < 0.01
    assert np.max(np.abs(D_metric[iu] / exact[iu] - 1)) < 0.01


@pytest.mark.parametrize("a", [0.0, 1.0, 2.0])
def test_cusp_items(a):
    item = gallery.make_cusp(a)
    assert item.euler_characteristic is None and item.gauss_bonnet_residual() is None
    (ip,) = C.at_infinity_points(item.surface)
    assert ip.declared_finite == (a > 1)
    if a > 1:
        d = C.length(item.surface, [[0.0, 0.0], [0.5, 0.0]])
        assert_allclose(d, item.reference("distance_origin_half"), rtol=1e-8)


def test_half_cylinder_is_flat():
    m = gallery.make_cusp(0.0).surface
    X, Y, K = C.gaussian_curvature(m, shape=(128, 128), order=4)
    r = np.hypot(X, Y)
    mask = (r > 0.2) & np.isfinite(K)
    assert np.max(np.abs(K[mask])) < 1e-6


def test_hemisphere_cylinder():
    item = gallery.make_hemisphere_cylinder()
    m = item.surface
    ring = np.array([[np.cos(t), np.sin(t)] for t in np.linspace(0, 2 * np.pi, 7)])
    # both branches of the conformal factor equal 1 on the unit circle
    assert_allclose(m.conformal_factor(ring), 1.0, rtol=1e-14)
    assert_allclose(m.conformal_factor(ring * (1 - 1e-9)), 1.0, rtol=1e-8)
    assert_allclose(m.conformal_factor(ring * (1 + 1e-9)), 1.0, rtol=1e-8)
    assert_allclose(gallery.hemisphere_cylinder_density(ring * 0.5), 4 / (1.25) ** 2, rtol=1e-14)
    assert_allclose(total_mass(item.analytic_curvature) + item.mass_at_infinity, 4 * np.pi, rtol=1e-12)
    X, Y, K = C.gaussian_curvature(m, shape=(256, 256))
    r = np.hypot(X, Y)
    assert np.nanmax(np.abs(K[r < 0.9] - 1)) < 1e-3


# -- sphere items -------------------------------------------------------------------


def test_football_normalisation():
    item = gallery.make_football(np.pi)
    m = item.surface
    ang = np.linspace(0, 2 * np.pi, 9)[:-1]
    eq = np.stack([np.cos(ang), np.sin(ang), np.zeros(8)], axis=1)
    dens = item.analytic_curvature.ac[0].density(eq)
    # curvature 1: omega density equals the conformal factor
    assert_allclose(m.conformal_factor(eq), dens, rtol=1e-6)
    assert abs(item.gauss_bonnet_residual()) < 1e-9


def test_football_rejects_angles():
    for theta in (0.0, 2 * np.pi, 7.0):
        with pytest.raises(InvalidArgumentError):
            gallery.make_football(theta)


def test_tetrahedral_rotations_preserve_points():
    P = gallery.tetrahedral_points()
    R = gallery.tetrahedral_rotations()
    assert len(R) == 12
    for M in R:
        assert_allclose(M @ M.T, np.eye(3), atol=1e-15)
        assert_allclose(np.linalg.det(M), 1.0)
        Q = P @ M.T
        assert all(np.min(np.linalg.norm(P - q, axis=1)) < 1e-14 for q in Q)


def test_every_item_balances():
    items = [gallery.make(n) for n in gallery.CONSTRUCTORS if n not in ("lantern",)]
    items.append(gallery.make_lantern(4, 6))
    for item in items:
        res = item.gauss_bonnet_residual()
        if res is None:
            continue
        tol = 0.0 if item.analytic_curvature.is_atomic else 1e-9
        assert abs(res) <= max(tol, 1e-11), item.name


def test_make_unknown():
    with pytest.raises(InvalidArgumentError):
        gallery.make("klein_bottle")
