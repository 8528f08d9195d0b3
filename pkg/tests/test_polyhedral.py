import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from bicsurf import gallery
from bicsurf.errors import InvalidArgumentError, VertexNotFoundError
from bicsurf.measure import total_mass
from bicsurf.polyhedral import (
    ConeSurface,
    build_geodesic_graph,
    cone_angle,
    cone_angles,
    curvature_measure,
    euler_characteristic,
    intrinsic_distance,
    point_distance_table,
    surface_area,
    validate,
    vertex_defects,
    vertex_distances,
)

TET_FACES = [[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]]


def tetrahedron(lengths=None):
    edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    if lengths is None:
        lengths = [1.0] * 6
    return ConeSurface(4, TET_FACES, dict(zip(edges, lengths)), name="tet")


def perturbed_cube(rng, scale=0.05):
    s = gallery.make_cube(1.0).surface
    pos = s.positions + rng.uniform(-scale, scale, size=s.positions.shape)
    return ConeSurface.from_positions(pos, s.faces, "cube_noisy")


# -- validate -------------------------------------------------------------


def test_validate_regular_tetrahedron():
    rep = validate(tetrahedron())
    assert rep.ok and not rep.issues()


def test_validate_triangle_violation():
    # face (0, 1, 2) gets sides 1, 1, 3
    s = tetrahedron([1.0, 1.0, 1.0, 3.0, 1.0, 1.0])
    rep = validate(s)
    assert 0 in rep.triangle_violations


def test_validate_disconnected():
    faces = np.array(TET_FACES + [[a + 4, b + 4, c + 4] for a, b, c in TET_FACES])
    lengths = {}
    for f in faces:
        for i, j in ((0, 1), (1, 2), (2, 0)):
            lengths[(min(f[i], f[j]), max(f[i], f[j]))] = 1.0
    rep = validate(ConeSurface(8, faces, lengths))
    assert rep.disconnected and rep.components == 2


def test_validate_boundary_edge():
    faces = TET_FACES[:3]
    lengths = {(0, 1): 1.0, (0, 2): 1.0, (0, 3): 1.0, (1, 2): 1.0, (1, 3): 1.0, (2, 3): 1.0}
    rep = validate(ConeSurface(4, faces, lengths))
    assert rep.nonmanifold_edges


def test_graph_rejects_invalid_faces():
    with pytest.raises(InvalidArgumentError):
        build_geodesic_graph(tetrahedron([1.0, 1.0, 1.0, 3.0, 1.0, 1.0]), 1)


# -- cone angles and curvature ---------------------------------------------


def test_cone_angle_tetrahedron():
    s = tetrahedron()
    for v in range(4):
        assert_allclose(cone_angle(s, v), np.pi, rtol=1e-14)


def test_cone_angle_cube():
    s = gallery.make_cube(1.0).surface
    assert_allclose(cone_angles(s), 1.5 * np.pi, rtol=1e-14)


def test_cone_angle_flat_vertex():
    s = gallery.make_flat_torus(10).surface
    assert_allclose(cone_angles(s), 2 * np.pi, rtol=1e-13)


def test_cone_angle_unknown_vertex():
    with pytest.raises(VertexNotFoundError):
        cone_angle(tetrahedron(), 4)


def test_curvature_measure_cube():
    mu = curvature_measure(gallery.make_cube(1.0).surface)
    assert len(mu.atoms) == 8
    assert_allclose(mu.atom_masses(), np.pi / 2, rtol=0, atol=1e-12)


def test_curvature_measure_tetrahedron():
    mu = curvature_measure(tetrahedron())
    assert len(mu.atoms) == 4
    assert_allclose(mu.atom_masses(), np.pi, atol=1e-12)


def test_curvature_measure_flat_torus():
    assert curvature_measure(gallery.make_flat_torus(10).surface).is_empty


def test_euler_characteristics():
    assert euler_characteristic(tetrahedron()) == 2
    assert euler_characteristic(gallery.make_flat_torus(10).surface) == 0
    for k in range(4):
        assert euler_characteristic(gallery.make_icosphere(k).surface) == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_gauss_bonnet_exact_for_random_meshes(seed):
    rng = np.random.default_rng(seed)
    s = perturbed_cube(rng, 0.1)
    d = vertex_defects(s)
    assert abs(d.sum() - 2 * np.pi * euler_characteristic(s)) < 1e-9


def test_surface_area_cube():
    assert_allclose(surface_area(gallery.make_cube(2.0).surface), 24.0, rtol=1e-13)


# -- geodesic graph ----------------------------------------------------------


def test_graph_level_zero_is_edge_graph():
    s = tetrahedron([1.0, 1.1, 1.2, 1.3, 1.4, 1.5])
    g = build_geodesic_graph(s, 0)
    assert g.n_nodes == 4
    for (i, j), L in s.edge_lengths.items():
        assert g.arc_weight(i, j) == L


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_graph_node_count_tetrahedron(k):
    assert build_geodesic_graph(tetrahedron(), k).n_nodes == 4 + 6 * k


def test_midpoint_arc_weight():
    s = tetrahedron()
    g = build_geodesic_graph(s, 1)
    e0, e1, _ = s.face_edges[0]
    assert_allclose(g.arc_weight(4 + e0, 4 + e1), 0.5, rtol=1e-14)


def test_nested_graph_contains_previous_level():
    s = gallery.make_cube(1.0).surface
    for k in range(1, 4):
        assert build_geodesic_graph(s, k, nested=True).n_nodes > build_geodesic_graph(s, k - 1, nested=True).n_nodes


# -- intrinsic distance ------------------------------------------------------


def test_distance_same_vertex():
    assert intrinsic_distance(tetrahedron(), 2, 2, 3) == 0.0


@pytest.mark.parametrize("k", [0, 1, 2, 4])
def test_distance_adjacent_tetrahedron(k):
    assert_allclose(intrinsic_distance(tetrahedron(), 0, 1, k), 1.0, rtol=1e-14)


def test_distance_cube_face_diagonal_converges():
    s = gallery.make_cube(1.0).surface
    pos = s.positions
    # two diagonal corners of the face z = 0 that are not joined by a mesh edge
    bottom = [v for v in range(8) if pos[v, 2] == 0]
    pairs = [(p, q) for p in bottom for q in bottom if p < q and np.isclose(np.linalg.norm(pos[p] - pos[q]), 2**0.5)]
    p, q = next((p, q) for p, q in pairs if (p, q) not in s.edge_lengths)
    errs = [intrinsic_distance(s, p, q, k) - 2**0.5 for k in range(0, 6)]
    assert errs[0] > 0.5  # around the edges
    assert np.all(np.diff(errs) <= 1e-12)
    assert errs[-1] < 1e-3


def test_distance_unknown_vertex():
    with pytest.raises(VertexNotFoundError):
        intrinsic_distance(tetrahedron(), 0, 9, 1)


def test_distance_pseudometric_and_monotone():
    rng = np.random.default_rng(11)
    s = perturbed_cube(rng)
    n = s.n_vertices
    prev = None
    for k in range(4):
        D = vertex_distances(s, list(range(n)), k)
        assert_allclose(D, D.T, rtol=0, atol=1e-12)
        for i, j, m in rng.integers(0, n, size=(200, 3)):
            assert D[i, j] <= D[i, m] + D[m, j] + 1e-12
        if prev is not None:
            assert np.all(D <= prev + 1e-12)
        prev = D


def test_homothety():
    rng = np.random.default_rng(5)
    s = perturbed_cube(rng)
    t = s.scaled(2.5)
    assert curvature_measure(s).atoms == curvature_measure(t).atoms or np.allclose(
        curvature_measure(s).atom_masses(), curvature_measure(t).atom_masses(), rtol=0, atol=1e-13
    )
    assert_allclose(vertex_distances(t, [0, 3], 3), 2.5 * vertex_distances(s, [0, 3], 3), rtol=1e-13)


def test_point_table_cube_same_face():
    s = gallery.make_cube(1.0).surface
    bary = np.array([[0.6, 0.2, 0.2], [0.2, 0.2, 0.6]])
    D = point_distance_table(s, [0, 0], bary, 2)
    # a straight segment inside one flat face is a geodesic
    from bicsurf.polyhedral import _face_layout

    P = _face_layout(s.side_lengths()[[0]])[0]
    assert_allclose(D[0, 1], np.linalg.norm((bary[0] - bary[1]) @ P), rtol=1e-14)


def test_point_table_rejects_bad_bary():
    s = gallery.make_cube(1.0).surface
    with pytest.raises(InvalidArgumentError):
        point_distance_table(s, [0], [[0.5, 0.6, 0.1]], 1)
    with pytest.raises(InvalidArgumentError):
        point_distance_table(s, [99], [[0.5, 0.25, 0.25]], 1)


def test_cube_total_defect():
    assert_allclose(total_mass(gallery.make_cube(5.0).analytic_curvature), 4 * np.pi, atol=1e-12)
