"""Background triangulations: icospheres and periodic torus grids."""

from functools import lru_cache

import numpy as np

from . import steiner
from .errors import InvalidArgumentError

_PHI = (1.0 + 5.0 ** 0.5) / 2.0


def _icosahedron():
    v = np.array(
        [
            [-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
            [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
            [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1],
        ],
        dtype=float,
    )
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


def orient_outward(vertices, faces):
    """Flip faces whose normal points towards the origin."""
    a, b, c = (vertices[faces[:, i]] for i in range(3))
    inward = np.einsum("ij,ij->i", np.cross(b - a, c - a), a + b + c) < 0
    faces = faces.copy()
    faces[inward] = faces[inward][:, [0, 2, 1]]
    return faces


def _subdivide(vertices, faces):
    edges, face_edges, _ = steiner.edge_table(faces)
    mid = vertices[edges[:, 0]] + vertices[edges[:, 1]]
    mid /= np.linalg.norm(mid, axis=1, keepdims=True)
    nv = vertices.shape[0]
    m = nv + face_edges  # side j is opposite corner j
    a, b, c = faces.T
    new = np.concatenate(
        [
            np.stack([a, m[:, 2], m[:, 1]], axis=1),
            np.stack([b, m[:, 0], m[:, 2]], axis=1),
            np.stack([c, m[:, 1], m[:, 0]], axis=1),
            np.stack([m[:, 0], m[:, 1], m[:, 2]], axis=1),
        ]
    )
    return np.concatenate([vertices, mid]), new


@lru_cache(maxsize=16)
def _icosphere_cached(level):
    v, f = _icosahedron()
    for _ in range(level):
        v, f = _subdivide(v, f)
    f = orient_outward(v, f)
    v.setflags(write=False)
    f.setflags(write=False)
    return v, f


def icosphere(level):
    """Unit-sphere vertices and outward faces of the level-``level`` icosahedral subdivision.

    Level ``k`` has ``10 * 4**k + 2`` vertices and ``20 * 4**k`` faces. Vertex
    indices are nested: the vertices of level ``k`` keep their indices at every
    finer level. The vertex set is centrally symmetric.
    """
    level = int(level)
    if level < 0:
        raise InvalidArgumentError("icosphere level must be >= 0")
    v, f = _icosphere_cached(level)
    return v.copy(), f.copy()


def torus_grid(n):
    """``n x n`` periodic grid of the unit square, each cell split along its diagonal.

    Returns ``(vertices (n*n, 2), faces, corners)`` where ``corners`` are the
    unwrapped ``(F, 3, 2)`` corner coordinates of every face.
    """
    n = int(n)
    if n < 3:
        raise InvalidArgumentError("torus grid needs n >= 3")
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    i = i.ravel()
    j = j.ravel()
    vid = lambda a, b: (a % n) * n + (b % n)  # noqa: E731
    v00, v10, v11, v01 = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
    faces = np.concatenate([np.stack([v00, v10, v11], 1), np.stack([v00, v11, v01], 1)])
    base = np.stack([i, j], axis=1) / n
    h = 1.0 / n
    c1 = np.stack([base, base + [h, 0], base + [h, h]], axis=1)
    c2 = np.stack([base, base + [h, h], base + [0, h]], axis=1)
    corners = np.concatenate([c1, c2])
    verts = np.stack([i, j], axis=1) / n
    return verts, faces, corners


def central_barycentric(vertices, faces, points):
    """Barycentric coordinates of the central projections of ``points`` on every face.

    Returns ``(P, F, 3)``; a point projects into face ``f`` when all three
    coordinates are non-negative.
    """
    M = np.stack([vertices[faces[:, i]] for i in range(3)], axis=2)  # (F, 3, 3), columns a, b, c
    Minv = np.linalg.inv(M)
    lam = np.einsum("fij,pj->pfi", Minv, np.atleast_2d(points))
    return lam / lam.sum(axis=2, keepdims=True)


def locate_on_sphere(vertices, faces, points):
    """Face index and barycentric coordinates (in the flat face) of each point."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    out_f = np.empty(points.shape[0], dtype=np.int64)
    out_b = np.empty((points.shape[0], 3))
    a, b, c = (vertices[faces[:, i]] for i in range(3))
    normal = np.cross(b - a, c - a)
    for k, p in enumerate(points):
        # restrict to faces whose plane the ray from the origin meets in front
        cand = np.flatnonzero(normal @ p > 0)
        lam = central_barycentric(vertices, faces[cand], p[None])[0]
        best = np.argmax(lam.min(axis=1))
        out_f[k] = cand[best]
        out_b[k] = lam[best]
    return out_f, out_b
