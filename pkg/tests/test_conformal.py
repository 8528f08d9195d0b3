import numpy as np
import pytest
from numpy.testing import assert_allclose

from bicsurf import conformal as C
from bicsurf import gallery
from bicsurf.errors import (
    BalanceViolationError,
    IndeterminateSingularityError,
    InadmissibleAtomError,
    InfiniteLengthError,
    InvalidArgumentError,
)
from bicsurf.green import PLANE, SPHERE, TORUS
from bicsurf.measure import SignedMeasure, area_measure, total_mass

N = (0.0, 0.0, 1.0)
S = (0.0, 0.0, -1.0)


@pytest.fixture(scope="module")
def round_metric():
    return gallery.make_round_sphere().surface


@pytest.fixture(scope="module")
def tetrahedral():
    return gallery.make_tetrahedral().surface


def unit(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


# -- curvature_of -----------------------------------------------------------


def test_curvature_of_round(round_metric):
    mu = C.curvature_of(round_metric)
    assert_allclose(total_mass(mu), 4 * np.pi, rtol=1e-12)
    bare = C.from_measure(SPHERE, SignedMeasure("sphere"))
    assert_allclose(total_mass(C.curvature_of(bare)), 4 * np.pi, rtol=1e-12)


@pytest.mark.parametrize("beta", [-0.5, 0.5, 2.0])
def test_curvature_of_plane_cone(beta):
    m = C.from_measure(PLANE, SignedMeasure("plane", (((0.0, 0.0), -2 * np.pi * beta),)))
    mu = C.curvature_of(m)
    assert mu.is_atomic and len(mu.atoms) == 1
    assert mu.atoms[0].point == (0.0, 0.0)
    assert_allclose(mu.atoms[0].mass, -2 * np.pi * beta, rtol=1e-15)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_cusp_gaussian_curvature(a):
    m = gallery.make_cusp(a).surface
    X, Y, K = C.gaussian_curvature(m, shape=(257, 257), order=4)
    r = np.hypot(X, Y)
    mask = (r > 0.2) & (r < 0.55) & np.isfinite(K)
    # K = -a |log r|^(2a - 2) with respect to the metric area
    exact = -a * np.abs(np.log(r[mask])) ** (2 * a - 2)
    assert np.max(np.abs(K[mask] - exact)) < 1e-4 * max(1.0, np.max(np.abs(exact)))


def test_cusp_curvature_density_in_chart():
    a = 1.0
    m = gallery.make_cusp(a).surface
    mu = C.curvature_of(m, order=4, shape=(200, 200))
    grid = mu.ac[0]
    ny, nx = grid.values.shape
    xs = grid.x0 + (np.arange(nx) + 0.5) * (grid.x1 - grid.x0) / nx
    ys = grid.y0 + (np.arange(ny) + 0.5) * (grid.y1 - grid.y0) / ny
    X, Y = np.meshgrid(xs, ys)
    r = np.hypot(X, Y)
    mask = (r > 0.2) & (r < 0.55)
    exact = -a / (r**2 * np.log(r) ** 2)
    assert_allclose(grid.values[mask], exact[mask], rtol=1e-4)
    assert [a_.mass for a_ in mu.atoms] == [2 * np.pi]


def test_curvature_of_sphere_closed_form_rejected():
    with pytest.raises(InvalidArgumentError):
        C.curvature_of(C.closed_form(SPHERE, "0"))


def test_classification_consistency(tetrahedral):
    omega = gallery.make_tetrahedral().analytic_curvature
    assert C.curvature_of(tetrahedral).equals(omega)


# -- length -------------------------------------------------------------------


def test_length_flat():
    m = C.closed_form(PLANE, "0")
    P = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 2.0]])
    assert_allclose(C.length(m, P), 3.0, rtol=1e-14)


def test_length_round_sphere_is_great_circle(round_metric):
    P = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    assert_allclose(C.length(round_metric, P), np.pi, rtol=1e-9)


@pytest.mark.parametrize("beta", [-0.5, 0.5, 2.0])
def test_length_cone_radial(beta):
    m = C.from_measure(PLANE, SignedMeasure("plane", (((0.0, 0.0), -2 * np.pi * beta),)))
    z0 = np.array([0.6, -0.3])
    exact = np.linalg.norm(z0) ** (beta + 1) / (beta + 1)
    assert_allclose(C.length(m, [[0.0, 0.0], z0]), exact, rtol=1e-10)


@pytest.mark.parametrize("a", [0.5, 1.0])
def test_length_cusp_infinite(a):
    m = gallery.make_cusp(a).surface
    with pytest.raises(InfiniteLengthError):
        C.length(m, [[-0.5, 0.0], [0.5, 0.0]])


def test_length_cusp_finite():
    a = 2.0
    m = gallery.make_cusp(a).surface
    # int_0^(1/2) dr / (r |log r|^2) = 1 / log 2
    assert_allclose(C.length(m, [[0.0, 0.0], [0.5, 0.0]]), 1 / np.log(2), rtol=1e-8)


def test_length_atom_above_two_pi():
    m = C.from_measure(PLANE, SignedMeasure("plane", (((0.0, 0.0), 3 * np.pi),)))
    with pytest.raises(InfiniteLengthError):
        C.length(m, [[0.0, 0.0], [0.5, 0.0]])


# -- distance -------------------------------------------------------------------


def test_distance_same_point(round_metric):
    assert C.distance(round_metric, N, N, 2) == 0.0


def test_distance_round_antipodal(round_metric):
    assert C.graph(round_metric, 4).n_nodes >= 20000
    rng = np.random.default_rng(0)
    for p in unit(rng, 3):
        assert abs(C.distance(round_metric, p, -p, 4) / np.pi - 1) < 0.01


def test_distance_football():
    m = gallery.make_football(np.pi).surface
    assert abs(C.distance(m, N, S, 4) / np.pi - 1) < 0.01


def test_distance_cone_radial():
    m = gallery.make_cone(np.pi, twin=False).surface
    z0 = (0.5, 0.25)
    exact = gallery.cone_radial_distance(np.pi, z0)
    assert abs(C.distance(m, (0.0, 0.0), z0, 4) / exact - 1) < 0.005


def test_distance_outside_domain():
    m = gallery.make_cone(np.pi, twin=False).surface
    with pytest.raises(InvalidArgumentError):
        C.distance(m, (0.0, 0.0), (2.0, 0.0), 2)


def test_distance_cusp_endpoints():
    with pytest.raises(InfiniteLengthError):
        C.distance(gallery.make_cusp(1.0).surface, (0.0, 0.0), (0.3, 0.0), 2)
    m = C.closed_form(PLANE, "0", singular=(C.SingularPoint((0.0, 0.0), 2 * np.pi),), domain=(-1, 1, -1, 1))
    with pytest.raises(IndeterminateSingularityError):
        C.distance(m, (0.0, 0.0), (0.3, 0.0), 2)


def test_distance_cusp_finite_graph():
    m = gallery.make_cusp(2.0).surface
    d = C.distance(m, (0.0, 0.0), (0.5, 0.0), 3)
    assert abs(d * np.log(2) - 1) < 0.01


def test_distance_pseudometric_sphere(tetrahedral):
    rng = np.random.default_rng(1)
    P = unit(rng, 8)
    D = np.array([[C.distance(tetrahedral, p, q, 3) for q in P] for p in P])
    assert np.max(np.abs(D - D.T)) < 1e-10
    for i, j, k in rng.integers(0, 8, size=(300, 3)):
        assert D[i, j] <= D[i, k] + D[k, j] + 1e-10


def test_distance_table_plane_pseudometric():
    m = gallery.make_cone(3 * np.pi, twin=False).surface
    rng = np.random.default_rng(2)
    P = rng.uniform(-0.9, 0.9, size=(10, 2))
    D = C.distance_table(m, P, 3)
    assert np.max(np.abs(D - D.T)) == 0.0
    for k in range(10):
        assert np.all(D <= D[:, k : k + 1] + D[k : k + 1, :] + 1e-10)


def test_homothety(tetrahedral):
    rng = np.random.default_rng(3)
    P = unit(rng, 5)
    lam = 2.75
    big = tetrahedral.with_scale(lam)
    assert_allclose(C.distance_table(big, P, 3), lam * C.distance_table(tetrahedral, P, 3), rtol=1e-15)
    assert C.curvature_of(big) is C.curvature_of(tetrahedral)
    assert_allclose(C.length(big, P[:2]), lam * C.length(tetrahedral, P[:2]), rtol=1e-14)


def test_offset_uniqueness(tetrahedral):
    rng = np.random.default_rng(4)
    P = unit(rng, 6)
    c = 0.37
    T0 = C.distance_table(tetrahedral, P, 3)
    T1 = C.distance_table(tetrahedral.with_offset(c), P, 3)
    iu = np.triu_indices(6, 1)
    assert_allclose(T1[iu] / T0[iu], np.exp(c), rtol=1e-10)


# -- classify_construct -----------------------------------------------------------


def test_classify_round_is_zero_potential(round_metric):
    rng = np.random.default_rng(5)
    assert np.max(np.abs(round_metric.u(unit(rng, 20)))) < 1e-12


def test_tetrahedral_symmetry(tetrahedral):
    rng = np.random.default_rng(6)
    P = unit(rng, 4)
    R = gallery.tetrahedral_rotations()
    base = C.distance_table(tetrahedral, P, 3)
    for M in R[1:4]:
        rotated = C.distance_table(tetrahedral, P @ M.T, 3)
        iu = np.triu_indices(4, 1)
        assert np.max(np.abs(rotated[iu] / base[iu] - 1)) < 0.01


def test_classify_errors():
    with pytest.raises(InadmissibleAtomError):
        C.classify_construct(SPHERE, SignedMeasure("sphere", ((N, 4 * np.pi),)))
    with pytest.raises(BalanceViolationError):
        C.classify_construct(SPHERE, SignedMeasure("sphere", ((N, 3 * np.pi),)))
    with pytest.raises(BalanceViolationError):
        C.classify_construct(TORUS, SignedMeasure("torus", (((0.5, 0.5), 1.0),)))
    with pytest.raises(InvalidArgumentError):
        C.classify_construct(PLANE, SignedMeasure("plane"))
    with pytest.raises(InvalidArgumentError):
        C.classify_construct(SPHERE, SignedMeasure("torus"))


def test_inadmissible_error_carries_point():
    omega = SignedMeasure("sphere", ((N, 2.5 * np.pi), (S, 1.5 * np.pi)))
    with pytest.raises(InadmissibleAtomError) as info:
        C.classify_construct(SPHERE, omega)
    assert info.value.point == N


def test_torus_classification():
    omega = SignedMeasure("torus", (((0.25, 0.25), 1.0), ((0.75, 0.75), -1.0)))
    m = C.classify_construct(TORUS, omega)
    assert C.curvature_of(m).equals(omega)
    d = C.distance(m, (0.5, 0.0), (0.5, 0.5), 3)
    assert np.isfinite(d) and d > 0


# -- Liouville ---------------------------------------------------------------------


def test_liouville_constant():
    m = C.closed_form(PLANE, "0.7", domain=(-1, 1, -1, 1))
    rep = C.liouville_residual(m, 0.0, shape=(64, 64))
    assert rep.max_norm < 1e-12


def test_liouville_log_harmonic():
    m = C.closed_form(PLANE, "0.5*log(sqrt(x**2 + y**2))", domain=(-1, 1, -1, 1))
    region = lambda p: np.linalg.norm(p, axis=1) > 0.3
    rep = C.liouville_residual(m, 0.0, order=4, shape=(128, 128), region=region)
    assert rep.max_norm < 1e-5


def test_liouville_hemisphere_cylinder():
    m = gallery.make_hemisphere_cylinder().surface
    region = lambda p: np.abs(np.linalg.norm(p, axis=1) - 1) > 0.1
    target = lambda p: (np.linalg.norm(p, axis=1) < 1).astype(float)
    rep = C.liouville_residual(m, target, shape=(512, 512), region=region)
    assert rep.max_norm < 1e-3


# -- points at infinity ---------------------------------------------------------------


def test_at_infinity_empty_for_cube_like():
    P = np.array([[x, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)]) / np.sqrt(3)
    omega = SignedMeasure("sphere", tuple((tuple(p), np.pi / 2) for p in P))
    assert C.at_infinity_points(C.classify_construct(SPHERE, omega)) == []


def test_at_infinity_cusp():
    (ip,) = C.at_infinity_points(gallery.make_cusp(1.0).surface)
    assert ip.point == (0.0, 0.0) and ip.status == "indeterminate"


def test_at_infinity_heavy_atom():
    m = C.from_measure(PLANE, SignedMeasure("plane", (((0.2, 0.1), 3 * np.pi),)))
    (ip,) = C.at_infinity_points(m)
    assert ip.status == "at-infinity" and ip.point == (0.2, 0.1)
