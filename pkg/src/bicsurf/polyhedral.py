"""Polyhedral (cone) metrics given by a triangulation with edge lengths."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import steiner
from .errors import InvalidArgumentError, VertexNotFoundError
from .measure import Atom, SignedMeasure

TWO_PI = 2.0 * np.pi
TRIANGLE_MARGIN = 1e-12
FLAT_TOL = 1e-11


def _edge_key(i, j):
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True, eq=False)
class ConeSurface:
    """Closed oriented triangulated surface with intrinsic edge lengths.

    ``positions`` is optional metadata (an embedding used only for export,
    sampling and snapping); distances and curvature are computed from
    ``edge_lengths`` alone.
    """

    n_vertices: int
    faces: np.ndarray
    edge_lengths: dict
    positions: np.ndarray | None = None
    name: str = "mesh"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        faces = np.array(self.faces, dtype=np.int64).reshape(-1, 3)
        faces.setflags(write=False)
        object.__setattr__(self, "faces", faces)
        lengths = {_edge_key(int(i), int(j)): float(L) for (i, j), L in dict(self.edge_lengths).items()}
        object.__setattr__(self, "edge_lengths", lengths)
        if self.positions is not None:
            pos = np.array(self.positions, dtype=float)
            pos.setflags(write=False)
            object.__setattr__(self, "positions", pos)

    @classmethod
    def from_positions(cls, positions, faces, name="mesh"):
        positions = np.asarray(positions, dtype=float)
        faces = np.asarray(faces, dtype=np.int64)
        edges, _, _ = steiner.edge_table(faces)
        L = np.linalg.norm(positions[edges[:, 0]] - positions[edges[:, 1]], axis=1)
        lengths = {(int(a), int(b)): float(l) for (a, b), l in zip(edges, L)}
        return cls(len(positions), faces, lengths, positions, name)

    # -- derived combinatorics (cached) -------------------------------------
    @property
    def edges(self):
        if "edges" not in self._cache:
            edges, face_edges, _ = steiner.edge_table(self.faces)
            self._cache["edges"] = edges
            self._cache["face_edges"] = face_edges
        return self._cache["edges"]

    @property
    def face_edges(self):
        self.edges
        return self._cache["face_edges"]

    def side_lengths(self):
        """``(F, 3)`` lengths of the side opposite each corner."""
        if "side_lengths" not in self._cache:
            edges = self.edges
            try:
                L = np.array([self.edge_lengths[(int(a), int(b))] for a, b in edges])
            except KeyError as exc:
                raise InvalidArgumentError(f"missing edge length for edge {exc.args[0]}") from exc
            self._cache["edge_array"] = L
            self._cache["side_lengths"] = L[self.face_edges]
        return self._cache["side_lengths"]

    def edge_length_array(self):
        self.side_lengths()
        return self._cache["edge_array"]

    def scaled(self, lam):
        """Homothetic copy with all lengths multiplied by ``lam``."""
        if not lam > 0:
            raise InvalidArgumentError("scale factor must be positive")
        pos = None if self.positions is None else lam * self.positions
        return ConeSurface(
            self.n_vertices,
            self.faces,
            {e: lam * L for e, L in self.edge_lengths.items()},
            pos,
            self.name,
        )

    def with_edge_length(self, edge, length):
        lengths = dict(self.edge_lengths)
        lengths[_edge_key(*edge)] = float(length)
        return ConeSurface(self.n_vertices, self.faces, lengths, self.positions, self.name)


@dataclass
class ValidationReport:
    triangle_violations: list = field(default_factory=list)
    bad_lengths: list = field(default_factory=list)
    missing_lengths: list = field(default_factory=list)
    nonmanifold_edges: list = field(default_factory=list)
    orientation_errors: list = field(default_factory=list)
    bad_vertex_links: list = field(default_factory=list)
    unused_vertices: list = field(default_factory=list)
    components: int = 1

    @property
    def disconnected(self):
        return self.components > 1

    def issues(self):
        out = []
        for f in self.triangle_violations:
            out.append(f"triangle inequality violated on face {f}")
        for e in self.bad_lengths:
            out.append(f"non-positive or non-finite length on edge {e}")
        for e in self.missing_lengths:
            out.append(f"missing length for edge {e}")
        for e, n in self.nonmanifold_edges:
            out.append(f"edge {e} shared by {n} faces (need 2)")
        for e in self.orientation_errors:
            out.append(f"inconsistent orientation across edge {e}")
        for v in self.bad_vertex_links:
            out.append(f"vertex {v} link is not a single cycle")
        for v in self.unused_vertices:
            out.append(f"vertex {v} belongs to no face")
        if self.disconnected:
            out.append(f"surface is disconnected ({self.components} components)")
        return out

    @property
    def ok(self):
        return not self.issues()

    def __bool__(self):
        # truthy when there is something to report
        return not self.ok


def validate(s: ConeSurface) -> ValidationReport:
    """Check triangle inequalities, closed-manifold combinatorics and connectivity."""
    rep = ValidationReport()
    faces = s.faces
    edges = s.edges
    for a, b in edges:
        L = s.edge_lengths.get((int(a), int(b)))
        if L is None:
            rep.missing_lengths.append((int(a), int(b)))
        elif not (np.isfinite(L) and L > 0):
            rep.bad_lengths.append((int(a), int(b)))
    if not rep.missing_lengths:
        sl = s.side_lengths()
        for f, (l0, l1, l2) in enumerate(sl):
            m = TRIANGLE_MARGIN * max(l0, l1, l2, 1.0)
            if not (l0 + l1 > l2 + m and l1 + l2 > l0 + m and l2 + l0 > l1 + m):
                rep.triangle_violations.append(f)

    directed = {}
    for f in faces:
        for p, q in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            directed[(int(p), int(q))] = directed.get((int(p), int(q)), 0) + 1
    counts = {}
    for (p, q), n in directed.items():
        counts[_edge_key(p, q)] = counts.get(_edge_key(p, q), 0) + n
    for e, n in sorted(counts.items()):
        if n != 2:
            rep.nonmanifold_edges.append((e, n))
        elif directed.get(e, 0) != 1 or directed.get((e[1], e[0]), 0) != 1:
            rep.orientation_errors.append(e)

    used = np.zeros(s.n_vertices, dtype=bool)
    used[faces.ravel()] = True
    rep.unused_vertices = [int(v) for v in np.flatnonzero(~used)]

    # vertex links: the opposite edges around v must form one cycle
    link = {}
    for f in faces:
        for i in range(3):
            v, a, b = int(f[i]), int(f[(i + 1) % 3]), int(f[(i + 2) % 3])
            link.setdefault(v, []).append((a, b))
    for v, arcs in sorted(link.items()):
        nxt = {}
        ok = True
        for a, b in arcs:
            if a in nxt:
                ok = False
                break
            nxt[a] = b
        if ok:
            start = arcs[0][0]
            cur, steps = start, 0
            while True:
                cur = nxt.get(cur)
                steps += 1
                if cur is None or steps > len(arcs):
                    ok = False
                    break
                if cur == start:
                    ok = steps == len(arcs)
                    break
        if not ok:
            rep.bad_vertex_links.append(v)

    if faces.size:
        from scipy.sparse import coo_matrix
        from scipy.sparse.csgraph import connected_components

        ones = np.ones(edges.shape[0])
        adj = coo_matrix((ones, (edges[:, 0], edges[:, 1])), shape=(s.n_vertices, s.n_vertices))
        n_comp, labels = connected_components(adj, directed=False)
        n_comp = len(np.unique(labels[used])) + len(rep.unused_vertices)
        rep.components = int(n_comp)
    else:
        rep.components = s.n_vertices
    return rep


def face_angles(s: ConeSurface):
    """``(F, 3)`` interior angle at each corner by the law of cosines."""
    l0, l1, l2 = s.side_lengths().T
    c0 = (l1 * l1 + l2 * l2 - l0 * l0) / (2.0 * l1 * l2)
    c1 = (l2 * l2 + l0 * l0 - l1 * l1) / (2.0 * l2 * l0)
    c2 = (l0 * l0 + l1 * l1 - l2 * l2) / (2.0 * l0 * l1)
    return np.arccos(np.clip(np.stack([c0, c1, c2], axis=1), -1.0, 1.0))


def cone_angles(s: ConeSurface):
    return np.bincount(s.faces.ravel(), weights=face_angles(s).ravel(), minlength=s.n_vertices)


def cone_angle(s: ConeSurface, v: int) -> float:
    """Total angle at vertex ``v``."""
    if not 0 <= int(v) < s.n_vertices:
        raise VertexNotFoundError(f"vertex {v} not in surface with {s.n_vertices} vertices")
    return float(cone_angles(s)[int(v)])


def vertex_defects(s: ConeSurface):
    return TWO_PI - cone_angles(s)


def _vertex_point(s, v):
    if s.positions is not None:
        return tuple(float(c) for c in s.positions[v])
    return (float(v),)


def curvature_measure(s: ConeSurface) -> SignedMeasure:
    """Atoms ``2 pi - theta_v`` at the vertices.

    Defects with ``|defect| <= FLAT_TOL`` (law-of-cosines roundoff at flat
    vertices) are dropped.
    """
    d = vertex_defects(s)
    atoms = tuple(Atom(_vertex_point(s, v), float(d[v])) for v in range(s.n_vertices) if abs(d[v]) > FLAT_TOL)
    return SignedMeasure(f"mesh:{s.name}", atoms)


def euler_characteristic(s: ConeSurface) -> int:
    return int(s.n_vertices - s.edges.shape[0] + s.faces.shape[0])


def surface_area(s: ConeSurface) -> float:
    a, b, c = s.side_lengths().T
    p = 0.5 * (a + b + c)
    return float(np.sqrt(np.maximum(p * (p - a) * (p - b) * (p - c), 0.0)).sum())


# ---------------------------------------------------------------------------
# geodesic graph


@dataclass(frozen=True, eq=False)
class GeodesicGraph:
    """Steiner-refined graph on a :class:`ConeSurface`.

    Nodes ``0..V-1`` are the vertices; Steiner node ``i`` of edge ``e`` is
    ``V + e*m + i`` with ``m`` points per edge. ``adjacency`` is a symmetric scipy CSR matrix.
    """

    adjacency: object
    refinement_level: int
    n_vertices: int
    node_positions: np.ndarray | None = None
    nested: bool = False

    @property
    def n_nodes(self):
        return self.adjacency.shape[0]

    def arc_weight(self, i, j):
        return float(self.adjacency[i, j])

    def max_arc(self):
        return float(self.adjacency.data.max()) if self.adjacency.nnz else 0.0


def _face_layout(sl):
    """Planar corner coordinates ``(F, 3, 2)`` with ``a`` at the origin, ``b`` on the x axis."""
    l0, l1, l2 = sl.T
    F = sl.shape[0]
    P = np.zeros((F, 3, 2))
    P[:, 1, 0] = l2
    cosA = np.clip((l1 * l1 + l2 * l2 - l0 * l0) / (2.0 * l1 * l2), -1.0, 1.0)
    P[:, 2, 0] = l1 * cosA
    P[:, 2, 1] = l1 * np.sqrt(1.0 - cosA * cosA)
    return P


def build_geodesic_graph(s: ConeSurface, refinement_level: int, nested=False) -> GeodesicGraph:
    """Place ``refinement_level`` Steiner points on every edge and join face-mates.

    Arc weights are straight-line lengths in the planar layout of the face
    containing both endpoints. With ``nested=True`` the Steiner points of all
    levels ``0..refinement_level`` are placed together, so the graph of level
    ``k`` contains the graph of level ``k - 1``.
    """
    k = int(refinement_level)
    if k < 0:
        raise InvalidArgumentError("refinement level must be >= 0")
    key = ("graph", k, bool(nested))
    if key in s._cache:
        return s._cache[key]
    rep = validate(s)
    if rep.triangle_violations or rep.bad_lengths or rep.missing_lengths:
        raise InvalidArgumentError("; ".join(rep.issues()))
    pairs, bary = steiner.face_template(k, nested)
    t = np.array(steiner.edge_params(k, nested))
    m = t.size
    nodes, edges, _ = steiner.face_local_nodes(s.faces, m, s.n_vertices)
    P = _face_layout(s.side_lengths())
    local = np.einsum("lc,fcd->fld", bary, P)  # (F, L, 2)
    d = local[:, pairs[:, 0], :] - local[:, pairs[:, 1], :]
    w = np.sqrt((d * d).sum(axis=-1))
    # arcs along a side: exact fraction of the edge length, no layout roundoff
    ba, bb = bary[pairs[:, 0]], bary[pairs[:, 1]]
    for c in range(3):
        along = (ba[:, c] == 0) & (bb[:, c] == 0)
        if np.any(along):
            o = (c + 1) % 3
            w[:, along] = s.side_lengths()[:, c : c + 1] * np.abs(ba[along, o] - bb[along, o])[None, :]
    u = nodes[:, pairs[:, 0]]
    v = nodes[:, pairs[:, 1]]
    n = s.n_vertices + m * edges.shape[0]
    mat = steiner.assemble(n, u.ravel(), v.ravel(), w.ravel())
    pos = None
    if s.positions is not None:
        pa = s.positions[edges[:, 0]]
        pb = s.positions[edges[:, 1]]
        st = (pa[:, None, :] * (1 - t)[None, :, None] + pb[:, None, :] * t[None, :, None]).reshape(
            -1, s.positions.shape[1]
        )
        pos = np.concatenate([s.positions, st], axis=0)
    g = GeodesicGraph(mat, k, s.n_vertices, pos, bool(nested))
    s._cache[key] = g
    return g


def _check_vertex(s, v):
    if not 0 <= int(v) < s.n_vertices:
        raise VertexNotFoundError(f"vertex {v} not in surface with {s.n_vertices} vertices")
    return int(v)


def vertex_distances(s: ConeSurface, sources, refinement_level: int):
    """Distances from ``sources`` to all vertices, shape ``(len(sources), V)``.

    Uses the nested graph of level ``k`` (Steiner points of every level
    ``0..k`` at once). Its arcs are straight segments inside faces, so each
    value is the length of a real surface path; the graph only gains nodes and
    arcs as ``k`` grows, so values never increase with the level.
    """
    sources = [_check_vertex(s, v) for v in np.atleast_1d(sources)]
    k = int(refinement_level)
    key = ("vdist", k, tuple(sources))
    if key not in s._cache:
        g = build_geodesic_graph(s, k, nested=True)
        s._cache[key] = steiner.shortest_paths(g.adjacency, sources)[:, : s.n_vertices]
    return s._cache[key].copy()


def intrinsic_distance(s: ConeSurface, p: int, q: int, refinement_level: int) -> float:
    """Upper bound on the intrinsic distance between vertices ``p`` and ``q``."""
    p = _check_vertex(s, p)
    q = _check_vertex(s, q)
    if p == q:
        return 0.0
    return float(vertex_distances(s, [p], refinement_level)[0, q])


def node_distances(g: GeodesicGraph, sources):
    return steiner.shortest_paths(g.adjacency, sources)


def nearest_node(g: GeodesicGraph, points):
    """Indices of the graph nodes closest (in embedding coordinates) to ``points``."""
    if g.node_positions is None:
        raise InvalidArgumentError("surface has no embedded positions to snap against")
    from scipy.spatial import cKDTree

    tree = cKDTree(g.node_positions)
    _, idx = tree.query(np.atleast_2d(points))
    return idx


def _point_arcs(s, g, face_ids, bary):
    """Arcs joining virtual nodes (points inside faces) to the local nodes of their face."""
    pairs, tbary = steiner.face_template(g.refinement_level, g.nested)
    m = (tbary.shape[0] - 3) // 3
    nodes = steiner.face_local_nodes(s.faces, m, s.n_vertices)[0][face_ids]
    P = _face_layout(s.side_lengths()[face_ids])  # (m, 3, 2)
    local = np.einsum("lc,mcd->mld", tbary, P)
    at = np.einsum("mc,mcd->md", bary, P)
    w = np.linalg.norm(local - at[:, None, :], axis=-1)
    virt = g.n_nodes + np.arange(len(face_ids))
    return np.repeat(virt, nodes.shape[1]), nodes.ravel(), w.ravel()


def point_distance_table(s: ConeSurface, face_ids, bary, refinement_level: int, nested=True):
    """Distances between points given by face index and barycentric coordinates.

    Every point becomes a virtual node joined straight to the Steiner and
    corner nodes of its face (and to the other points of that face). The
    result is a shortest-path metric on one graph, so it is symmetric and
    satisfies the triangle inequality exactly; with ``nested=True`` (see
    :func:`build_geodesic_graph`) it is also non-increasing in the level.
    """
    face_ids = np.asarray(face_ids, dtype=np.int64)
    bary = np.atleast_2d(np.asarray(bary, dtype=float))
    if face_ids.shape[0] != bary.shape[0] or bary.shape[1] != 3:
        raise InvalidArgumentError("need one barycentric triple per face index")
    if np.any((face_ids < 0) | (face_ids >= s.faces.shape[0])):
        raise InvalidArgumentError("face index out of range")
    if np.any(bary < -1e-12) or not np.allclose(bary.sum(axis=1), 1.0):
        raise InvalidArgumentError("barycentric coordinates must be non-negative and sum to 1")
    m = face_ids.shape[0]
    g = build_geodesic_graph(s, int(refinement_level), nested)
    u, v, w = _point_arcs(s, g, face_ids, bary)
    virt = g.n_nodes + np.arange(m)
    i, j = np.nonzero(np.triu(face_ids[:, None] == face_ids[None, :], 1))
    if i.size:
        P = _face_layout(s.side_lengths()[face_ids])
        at = np.einsum("mc,mcd->md", bary, P)
        u = np.concatenate([u, virt[i]])
        v = np.concatenate([v, virt[j]])
        w = np.concatenate([w, np.linalg.norm(at[i] - at[j], axis=1)])
    base = g.adjacency.tocoo()
    mat = steiner.assemble(g.n_nodes + m, np.concatenate([base.row, u]), np.concatenate([base.col, v]),
                           np.concatenate([base.data, w]))
    d = steiner.shortest_paths(mat, virt)[:, virt]
    d = np.minimum(d, d.T)
    np.fill_diagonal(d, 0.0)
    return d
