"""Steiner-point templates and shortest paths on weighted graphs.

A triangle ``(a, b, c)`` carries ``k`` Steiner points on each side. Sides
are numbered by the opposite corner: side 0 runs from ``b`` to ``c``, side 1
from ``c`` to ``a``, side 2 from ``a`` to ``b``. Local point indices are
``0, 1, 2`` for the corners and ``3 + j*k + i`` for the ``i``-th Steiner
point on side ``j`` (counted from the side's start).
"""

from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

_SIDE_ENDS = ((1, 2), (2, 0), (0, 1))


@lru_cache(maxsize=32)
def edge_params(k, nested=False):
    """Steiner parameters in ``(0, 1)`` along an edge.

    ``nested=False``: the ``k`` uniform points ``i / (k + 1)``. ``nested=True``:
    the union of the uniform sets of levels ``0..k`` (all fractions with
    denominator at most ``k + 1``), so level ``k`` contains level ``k - 1``.
    The set is symmetric under ``t -> 1 - t``.
    """
    k = int(k)
    if not nested:
        return tuple((np.arange(k) + 1.0) / (k + 1.0))
    fr = sorted({Fraction(i, d) for d in range(2, k + 2) for i in range(1, d)})
    return tuple(float(f) for f in fr)


@lru_cache(maxsize=32)
def face_template(k, nested=False):
    """Local arcs of one face: ``(pairs (T, 2), bary (3 + 3m, 3))``, ``m = len(edge_params(k, nested))``.

    ``pairs`` joins every two local points that do not lie on a common side,
    plus consecutive points along each side. ``bary`` holds the barycentric
    coordinates of each local point.
    """
    t = np.array(edge_params(k, nested))
    k = t.size
    n_local = 3 + 3 * k
    sides = [set() for _ in range(n_local)]
    sequences = []
    bary = np.zeros((n_local, 3))
    bary[0, 0] = bary[1, 1] = bary[2, 2] = 1.0
    for j, (p, q) in enumerate(_SIDE_ENDS):
        ids = [3 + j * k + i for i in range(k)]
        sides[p].add(j)
        sides[q].add(j)
        for i, lid in enumerate(ids):
            sides[lid].add(j)
            bary[lid, p] = 1.0 - t[i]
            bary[lid, q] = t[i]
        sequences.append([p] + ids + [q])
    consecutive = set()
    for seq in sequences:
        for x, y in zip(seq[:-1], seq[1:]):
            consecutive.add((min(x, y), max(x, y)))
    pairs = []
    for x in range(n_local):
        for y in range(x + 1, n_local):
            if not (sides[x] & sides[y]) or (x, y) in consecutive:
                pairs.append((x, y))
    pairs = np.array(pairs, dtype=np.int64)
    pairs.setflags(write=False)
    bary.setflags(write=False)
    return pairs, bary


def edge_table(faces):
    """Unique sorted edges and, per face, the edge index of each side."""
    faces = np.asarray(faces, dtype=np.int64)
    side_pairs = np.stack(
        [faces[:, [p, q]] for (p, q) in _SIDE_ENDS], axis=1
    )  # (F, 3, 2)
    key = np.sort(side_pairs, axis=2).reshape(-1, 2)
    edges, inverse = np.unique(key, axis=0, return_inverse=True)
    return edges, inverse.reshape(-1, 3), side_pairs


def face_local_nodes(faces, k, n_vertices):
    """Global node id of each face-local point, shape ``(F, 3 + 3k)`` for ``k`` points per edge.

    Steiner node ``i`` of edge ``e = (u, v)`` (``u < v``) has id
    ``n_vertices + e*k + i`` and sits at the ``i``-th parameter from ``u``
    (parameter sets must be symmetric under ``t -> 1 - t``).
    """
    faces = np.asarray(faces, dtype=np.int64)
    edges, face_edges, side_pairs = edge_table(faces)
    F = faces.shape[0]
    out = np.empty((F, 3 + 3 * k), dtype=np.int64)
    out[:, :3] = faces
    if k:
        i = np.arange(k)
        for j in range(3):
            e = face_edges[:, j]
            forward = side_pairs[:, j, 0] == edges[e, 0]
            local = np.where(forward[:, None], i[None, :], (k - 1 - i)[None, :])
            out[:, 3 + j * k : 3 + (j + 1) * k] = n_vertices + e[:, None] * k + local
    return out, edges, face_edges


def assemble(n_nodes, u, v, w):
    """Symmetric CSR adjacency from arc lists; duplicate arcs keep the minimum weight."""
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    w = np.asarray(w, dtype=float)
    keep = np.isfinite(w) & (u != v)
    u, v, w = u[keep], v[keep], w[keep]
    lo = np.minimum(u, v)
    hi = np.maximum(u, v)
    order = np.lexsort((w, hi, lo))
    lo, hi, w = lo[order], hi[order], w[order]
    first = np.ones(lo.size, dtype=bool)
    first[1:] = (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])
    lo, hi, w = lo[first], hi[first], w[first]
    mat = coo_matrix(
        (np.concatenate([w, w]), (np.concatenate([lo, hi]), np.concatenate([hi, lo]))),
        shape=(n_nodes, n_nodes),
    ).tocsr()
    return mat


def is_connected(mat):
    n, _ = connected_components(mat, directed=False)
    return n == 1


def shortest_paths(mat, sources):
    """Distances from each source to every node, shape ``(len(sources), n)``."""
    sources = np.atleast_1d(np.asarray(sources, dtype=np.int64))
    return dijkstra(mat, directed=False, indices=sources)
