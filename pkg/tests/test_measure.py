import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from bicsurf import gallery
from bicsurf.errors import InvalidArgumentError, InvalidMeasureError, InvalidTestFunctionError
from bicsurf.measure import (
    ConstDensity,
    CurvePart,
    SignedMeasure,
    TestFunctionSet,
    area_measure,
    bump,
    default_test_functions,
    gauss_bonnet_residual,
    integrate,
    jordan_split,
    max_atom,
    total_mass,
    total_variation,
    weak_distance,
    zero_measure,
)

FOUR_PI = 4 * np.pi


def cube_measure():
    return gallery.make_cube(1.0).analytic_curvature


def random_atoms(rng, n, carrier="plane"):
    pts = rng.uniform(-1, 1, size=(n, 2))
    masses = rng.uniform(-3, 3, size=n)
    return SignedMeasure(carrier, tuple(zip(map(tuple, pts), masses)))


# -- total_mass -----------------------------------------------------------


def test_total_mass_cube():
    assert_allclose(total_mass(cube_measure()), FOUR_PI, rtol=0, atol=1e-12)


def test_total_mass_zero():
    assert total_mass(zero_measure("sphere")) == 0.0


@pytest.mark.parametrize("r", [0.5, 1.0, 3.0])
def test_total_mass_can(r):
    mu = gallery.make_can(r, 2.0).analytic_curvature
    assert_allclose(total_mass(mu), FOUR_PI, rtol=0, atol=1e-9)


def test_sphere_area_measure_mass():
    assert_allclose(total_mass(area_measure("sphere")), FOUR_PI, rtol=1e-12)


def test_nonfinite_atom_rejected():
    with pytest.raises(InvalidMeasureError):
        SignedMeasure("plane", (((0.0, 0.0), np.inf),))


def test_duplicate_atoms_merge():
    mu = SignedMeasure("plane", (((0.0, 0.0), 1.0), ((0.0, 1e-14), 2.0), ((1.0, 0.0), 0.5)))
    assert len(mu.atoms) == 2
    assert_allclose(sorted(mu.atom_masses()), [0.5, 3.0])


# -- jordan_split ---------------------------------------------------------


def test_jordan_split_atoms():
    mu = SignedMeasure("plane", (((0.0, 0.0), np.pi), ((1.0, 0.0), -np.pi / 2)))
    plus, minus = jordan_split(mu)
    assert [a.mass for a in plus.atoms] == [np.pi]
    assert [a.mass for a in minus.atoms] == [np.pi / 2]
    assert plus.atoms[0].point == (0.0, 0.0)
    assert minus.atoms[0].point == (1.0, 0.0)


def test_jordan_split_nonnegative():
    mu = cube_measure()
    plus, minus = jordan_split(mu)
    assert plus.equals(mu)
    assert minus.is_empty


def test_jordan_split_cusp():
    mu = gallery.make_cusp(1.5).analytic_curvature
    plus, minus = jordan_split(mu)
    assert plus.is_atomic and len(plus.atoms) == 1
    assert_allclose(plus.atoms[0].mass, 2 * np.pi)
    assert not minus.atoms and len(minus.ac) == 1 and minus.ac[0].coefficient > 0
    assert_allclose(total_mass(plus) - total_mass(minus), total_mass(mu), rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_jordan_split_preserves_mass(seed):
    rng = np.random.default_rng(seed)
    mu = random_atoms(rng, 6)
    c = rng.uniform(-2, 2)
    circle = CurvePart(ConstDensity(c), circle=((0.0, 0.0), 0.7, None))
    mu = SignedMeasure(mu.carrier, mu.atoms, (circle,))
    plus, minus = jordan_split(mu)
    assert all(a.mass > 0 for a in plus.atoms) and all(a.mass > 0 for a in minus.atoms)
    assert_allclose(total_mass(plus) - total_mass(minus), total_mass(mu), rtol=1e-12, atol=1e-12)
    assert_allclose(total_variation(mu), np.sum(np.abs(mu.atom_masses())) + abs(c) * 2 * np.pi * 0.7, rtol=1e-12)


# -- Gauss-Bonnet ---------------------------------------------------------


def test_gauss_bonnet_cube():
    assert abs(gauss_bonnet_residual(cube_measure(), 2)) < 1e-12


def test_gauss_bonnet_flat_torus():
    assert gauss_bonnet_residual(zero_measure("torus"), 0) == 0.0


def test_gauss_bonnet_glued_discs():
    mu = gallery.make_glued_discs(1.0).analytic_curvature
    assert not mu.atoms
    assert abs(gauss_bonnet_residual(mu, 2)) < 1e-9


# -- integrate ------------------------------------------------------------


def test_integrate_one_is_mass():
    mu = gallery.make_can(1.0, 2.0).analytic_curvature
    assert_allclose(integrate(mu, lambda p: np.ones(len(p))), total_mass(mu), rtol=1e-14)


def test_integrate_bump_at_cube_vertex():
    mu = cube_measure()
    p = mu.atom_points()[0]
    f = bump(p, 0.5)  # other vertices are at distance >= 1
    amp = f(p[None, :])[0]
    assert_allclose(integrate(mu, f) / amp, np.pi / 2, rtol=1e-12)


def test_integrate_r2_against_origin_atom():
    mu = SignedMeasure("plane", (((0.0, 0.0), 2 * np.pi),))
    assert integrate(mu, lambda p: np.sum(np.asarray(p) ** 2, axis=1)) == 0.0


def test_integrate_singular_test_function():
    mu = SignedMeasure("plane", (((0.0, 0.0), 1.0),))
    with np.errstate(divide="ignore"):
        with pytest.raises(InvalidTestFunctionError):
            integrate(mu, lambda p: 1.0 / np.linalg.norm(p, axis=1))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_integrate_linear(seed):
    rng = np.random.default_rng(seed)
    m1, m2 = random_atoms(rng, 5), random_atoms(rng, 4)
    a, b = rng.uniform(-2, 2, size=2)
    f = lambda p: np.cos(np.asarray(p)[:, 0]) + 0.3 * np.asarray(p)[:, 1]
    g = lambda p: np.asarray(p)[:, 0] ** 2
    lhs = integrate(a * m1 + b * m2, f)
    rhs = a * integrate(m1, f) + b * integrate(m2, f)
    assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-12)
    lhs = integrate(m1, lambda p: a * f(p) + b * g(p))
    assert_allclose(lhs, a * integrate(m1, f) + b * integrate(m1, g), rtol=1e-10, atol=1e-12)


# -- weak_distance --------------------------------------------------------


def test_weak_distance_identical():
    mu = cube_measure()
    mu = SignedMeasure("sphere", tuple((tuple((np.asarray(a.point) - 0.5) / np.linalg.norm(np.asarray(a.point) - 0.5)), a.mass)
                                       for a in mu.atoms))
    assert weak_distance(mu, mu) == 0.0


def test_weak_distance_two_diracs():
    p, q = np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0])
    dp = SignedMeasure("sphere", ((tuple(p), 1.0),))
    dq = SignedMeasure("sphere", ((tuple(q), 1.0),))
    d = weak_distance(dp, dq)
    assert 0 < d <= min(np.pi / 2, 2.0)
    # enriching the test set can only increase the lower bound
    T = default_test_functions("sphere")
    rich = TestFunctionSet(T.functions + (bump(p, 1.2),), T.names + ("extra",))
    assert weak_distance(dp, dq, rich) >= d


def test_weak_distance_empty_set():
    mu = zero_measure("sphere")
    with pytest.raises(InvalidArgumentError):
        weak_distance(mu, mu, TestFunctionSet(()))


def test_weak_distance_carrier_mismatch():
    with pytest.raises(InvalidArgumentError):
        weak_distance(zero_measure("sphere"), zero_measure("plane"))


def test_weak_distance_pseudometric():
    rng = np.random.default_rng(7)
    T = default_test_functions("plane", bbox=(-1, 1, -1, 1), n_centers=16)
    ms = [random_atoms(rng, 4) for _ in range(6)]
    for i in range(6):
        for j in range(6):
            dij = weak_distance(ms[i], ms[j], T)
            assert_allclose(dij, weak_distance(ms[j], ms[i], T), rtol=1e-12)
            for k in range(6):
                assert dij <= weak_distance(ms[i], ms[k], T) + weak_distance(ms[k], ms[j], T) + 1e-12


def test_weak_distance_icosphere_decreasing():
    area = area_measure("sphere")
    d = []
    for k in range(5):
        defect = gallery.make_icosphere(k).analytic_curvature
        d.append(weak_distance(SignedMeasure("sphere", defect.atoms), area))
    assert np.all(np.diff(d) < 0)


# -- max_atom -------------------------------------------------------------


def test_max_atom():
    assert_allclose(max_atom(cube_measure()), np.pi / 2, rtol=1e-12)
    assert_allclose(max_atom(gallery.make_cusp(1.0).analytic_curvature), 2 * np.pi)
    assert max_atom(zero_measure("plane")) == 0.0
