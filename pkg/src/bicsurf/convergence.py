"""Convergence experiments: uniform distance between metrics and weak distance of curvature.

All reported quantities are computed on finite samples, so they are lower
bounds on the underlying sup-distances ("empirical lower bound" columns).
Sample points come from a scrambled Sobol sequence with a recorded seed.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from . import conformal, io, meshes
from .errors import BudgetExceededError, InvalidArgumentError, MismatchedSamplesError
from .gallery import lantern_area, make_icosphere
from .green import SPHERE
from .measure import CapDensity, SignedMeasure, area_measure, max_atom, total_mass, weak_distance
from .polyhedral import build_geodesic_graph, point_distance_table

KMAX_BUDGET = 6
DEFAULT_STEINER = 16  # per edge; keeps the graph error below the level-4 polyhedral error


def threads():
    """Worker count: ``BIC_THREADS`` if set, else the CPU count."""
    env = os.environ.get("BIC_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise InvalidArgumentError(f"BIC_THREADS must be an integer, got {env!r}") from None
        return max(1, n)
    return max(1, os.cpu_count() or 1)


def ordered_map(fn, items, n_threads=None):
    """``list(map(fn, items))`` on a thread pool; results keep the input order."""
    items = list(items)
    n = n_threads or threads()
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# distance tables


@dataclass(frozen=True, eq=False)
class DistanceTable:
    """Symmetric matrix of distances between indexed sample points."""

    sample_points: np.ndarray
    values: np.ndarray
    provenance: tuple = ()

    def __post_init__(self):
        P = np.array(self.sample_points, dtype=float)
        D = np.array(self.values, dtype=float)
        if D.shape != (P.shape[0], P.shape[0]):
            raise InvalidArgumentError("distance table must be square with one row per sample point")
        P.setflags(write=False)
        D.setflags(write=False)
        object.__setattr__(self, "sample_points", P)
        object.__setattr__(self, "values", D)

    @property
    def size(self):
        return self.values.shape[0]

    def symmetry_defect(self):
        return float(np.max(np.abs(self.values - self.values.T))) if self.size else 0.0

    def triangle_defect(self):
        """``max_{i,j,k} d_ij - d_ik - d_kj`` (non-positive for a pseudometric)."""
        D = self.values
        if self.size == 0:
            return 0.0
        worst = -np.inf
        for k in range(self.size):
            worst = max(worst, float(np.max(D - D[:, k : k + 1] - D[k : k + 1, :])))
        return worst

    def scaled(self, lam):
        return DistanceTable(self.sample_points, lam * self.values, self.provenance)


def uniform_distance(t1: DistanceTable, t2: DistanceTable) -> float:
    """``max |t1 - t2|`` over sampled pairs: a lower bound on the uniform distance."""
    if t1.sample_points.shape != t2.sample_points.shape or not np.array_equal(t1.sample_points, t2.sample_points):
        raise MismatchedSamplesError("distance tables are sampled at different points")
    if t1.size == 0:
        return 0.0
    return float(np.max(np.abs(t1.values - t2.values)))


def sphere_samples(n, seed=0):
    """``n`` points on the unit sphere from a scrambled Sobol sequence (area-preserving map)."""
    if n < 1:
        raise InvalidArgumentError("sample size must be >= 1")
    m = int(np.ceil(np.log2(n)))
    u = qmc.Sobol(2, scramble=True, seed=seed).random_base2(m)[:n]
    z = 1.0 - 2.0 * u[:, 0]
    phi = 2.0 * np.pi * u[:, 1]
    r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def great_circle_table(points):
    P = np.asarray(points, dtype=float)
    D = np.arccos(np.clip(P @ P.T, -1.0, 1.0))
    np.fill_diagonal(D, 0.0)
    return DistanceTable(P, D, ("round_sphere", "exact"))


def icosphere_table(k, points, steiner_points=DEFAULT_STEINER, item=None):
    """Distances on the level-``k`` icosphere between the central projections of ``points``."""
    item = item or make_icosphere(k)
    V, F = meshes.icosphere(k)
    f, b = meshes.locate_on_sphere(V, F, points)
    D = point_distance_table(item.surface, f, b, steiner_points, nested=False)
    return DistanceTable(points, D, (item.name, int(steiner_points)))


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True, eq=False)
class Report:
    """Rows of an experiment plus the parameters needed to reproduce it."""

    name: str
    columns: tuple
    rows: tuple
    params: dict = field(default_factory=dict)
    passed: bool | None = None
    notes: str = ""

    def column(self, name):
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def to_csv(self, path=None, command=None):
        seed = self.params.get("seed")
        ps = " ".join(f"{k}={v}" for k, v in self.params.items() if k != "seed")
        head = io.header(command or f"converge {self.name} {ps}".strip(), seed)
        return io.write_csv(path, self.columns, self.rows, head)


def strictly_decreasing(values):
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) < 0))


def polyhedral_approximation_experiment(k_max=4, sample_size=32, seed=0, steiner_points=DEFAULT_STEINER,
                                        n_threads=None):
    """Icosphere-k versus the round sphere for ``k = 0..k_max``.

    Columns: ``k, nodes, uniform_lb`` (sampled uniform distance to the
    great-circle metric), ``weak_lb`` (empirical bounded-Lipschitz distance
    of the defect measure to the area measure) and ``total_defect``. The run
    passes when both distance columns are strictly decreasing.
    """
    if int(k_max) != k_max or k_max < 0:
        raise InvalidArgumentError("k_max must be a non-negative integer")
    if k_max > KMAX_BUDGET:
        raise BudgetExceededError(f"k_max = {k_max} exceeds the node budget (k_max <= {KMAX_BUDGET})")
    X = sphere_samples(sample_size, seed)
    exact = great_circle_table(X)
    area = area_measure("sphere")

    def row(k):
        item = make_icosphere(k)
        table = icosphere_table(k, X, steiner_points, item)
        g = build_geodesic_graph(item.surface, steiner_points)
        defect = item.analytic_curvature
        on_sphere = SignedMeasure("sphere", defect.atoms)  # vertices lie on the unit sphere
        return (k, g.n_nodes, uniform_distance(table, exact), weak_distance(on_sphere, area), total_mass(defect))

    rows = tuple(ordered_map(row, range(int(k_max) + 1), n_threads))
    cols = ("k", "nodes", "uniform_lb", "weak_lb", "total_defect")
    passed = strictly_decreasing([r[2] for r in rows]) and strictly_decreasing([r[3] for r in rows])
    params = {"kmax": int(k_max), "sample_size": int(sample_size), "steiner": int(steiner_points), "seed": seed}
    return Report("icosphere", cols, rows, params, passed, "uniform_lb and weak_lb are empirical lower bounds")


def mollify(omega: SignedMeasure, eps):
    """Replace every atom by the same mass spread uniformly on the geodesic disc of radius ``eps``."""
    caps = tuple(CapDensity(a.point, float(eps), a.mass) for a in omega.atoms)
    return SignedMeasure(omega.carrier, (), omega.curves, omega.ac + caps)


def _samples_away(omega, n, seed, clearance):
    pts = omega.atom_points()
    X = sphere_samples(4 * n + 16, seed)
    if len(pts):
        cos_sep = X @ np.asarray(pts, dtype=float).T
        keep = np.all(cos_sep < np.cos(clearance), axis=1)
        X = X[keep]
    if X.shape[0] < n:
        raise InvalidArgumentError("not enough sample points outside the atom neighbourhoods")
    return X[:n]


def mollification_experiment(omega: SignedMeasure, eps_list=tuple(2.0 ** -np.arange(3, 8)), sample_size=16,
                             seed=0, level=3, n_threads=None):
    """Sup-difference between distance tables of mollified and atomic metrics.

    Evidence only: the pass flag records a strictly decreasing column over the
    decreasing ``eps_list``, not the verification of a convergence theorem.
    """
    if omega.carrier != "sphere":
        raise InvalidArgumentError("mollification experiment runs on the sphere")
    eps_list = [float(e) for e in eps_list]
    if not eps_list or min(eps_list) <= 0:
        raise InvalidArgumentError("eps_list must contain positive radii")
    conformal.check_admissible(SPHERE, omega)
    X = _samples_away(omega, sample_size, seed, 2.0 * max(eps_list))
    atomic = conformal.classify_construct(SPHERE, omega)
    base = conformal.distance_table(atomic, X, level)

    def row(eps):
        if not omega.atoms:
            return (eps, 0.0, sample_size, seed)
        m = conformal.classify_construct(SPHERE, mollify(omega, eps))
        D = conformal.distance_table(m, X, level)
        return (eps, float(np.max(np.abs(D - base))), sample_size, seed)

    rows = tuple(ordered_map(row, eps_list, n_threads))
    sup = [r[1] for r in rows]
    passed = all(s == 0.0 for s in sup) or strictly_decreasing(sup)
    params = {"level": int(level), "max_atom": max_atom(omega), "sample_size": int(sample_size), "seed": seed}
    return Report("mollify", ("eps", "sup_diff", "sample_size", "seed"), rows, params, passed,
                  "evidence table; sup_diff is an empirical lower bound")


def lantern_experiment(mode="square", m_max=64, start=None):
    """Lateral area of Schwarz lanterns along a refinement family.

    ``mode="square"``: ``slices = sectors = n`` for ``n = 4, 8, ..., m_max``.
    ``mode="cubic"``: ``slices = sectors**3`` for ``sectors = 3..m_max``
    (doubling from 4). The cubic family passes when the area exceeds
    ``10 * 2 pi`` somewhere; the square family when its last row is within 1%
    of ``2 pi``.
    """
    if mode not in ("square", "cubic"):
        raise InvalidArgumentError("lantern mode must be 'square' or 'cubic'")
    if m_max < 3:
        raise InvalidArgumentError("m_max must be >= 3")
    sizes = []
    n = start or (4 if mode == "square" else 3)
    while n <= m_max:
        sizes.append(n)
        n = 4 if n == 3 else 2 * n
    rows = []
    for n in sizes:
        slices = n if mode == "square" else n ** 3
        A = lantern_area(slices, n)
        rows.append((n, slices, A, A / (2 * np.pi)))
    ratio = [r[3] for r in rows]
    if mode == "square":
        passed = abs(ratio[-1] - 1.0) < 0.01
    else:
        passed = max(ratio) > 10.0
    return Report("lantern", ("sectors", "slices", "area", "area_over_2pi"), tuple(rows),
                  {"mode": mode, "mmax": int(m_max)}, passed)
