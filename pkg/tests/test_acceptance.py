"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Every test measures its own wall time and fails if the runtime budget is
exceeded, in addition to the numerical tolerance.
"""

import time

import numpy as np
import pytest

from bicsurf import cli, gallery, io
from bicsurf import conformal as C
from bicsurf import convergence as cv
from bicsurf.errors import BalanceViolationError, InadmissibleAtomError
from bicsurf.green import PLANE, SPHERE, TORUS, green_sphere, potential, reproduce_smooth, zero_mean_residual
from bicsurf.measure import SignedMeasure, area_measure, total_mass
from bicsurf.polyhedral import curvature_measure, point_distance_table

pytestmark = pytest.mark.slow


def unit(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_c01_cube(criterion):
    with Clock() as clk:
        item = gallery.make_cube(1.0)
        mu = curvature_measure(item.surface)
        dev = np.max(np.abs(mu.atom_masses() - np.pi / 2))
        res = item.gauss_bonnet_residual()
    ok = len(mu.atoms) == 8 and dev < 1e-12 and res == 0 and clk.elapsed < 1
    criterion(1, ok, f"cube: 8 atoms, max |atom - pi/2| = {dev:.1e}, residual = {res}, {clk.elapsed:.2f}s")
    assert ok


def test_c02_can(criterion):
    with Clock() as clk:
        errs = [abs(total_mass(gallery.make_can(r, 2.0).analytic_curvature) - 4 * np.pi) for r in (0.5, 1.0, 3.0)]
    ok = max(errs) < 1e-9 and clk.elapsed < 1
    criterion(2, ok, f"can: max |total - 4pi| = {max(errs):.1e} over r in (0.5, 1, 3), {clk.elapsed:.2f}s")
    assert ok


def test_c03_cone(tmp_path, capsys, criterion):
    rng = np.random.default_rng(0)
    with Clock() as clk:
        z = rng.uniform(-3, 3, size=(100, 2))
        pot_err = 0.0
        for beta in (-0.5, 0.5, 2.0):
            mu = SignedMeasure("plane", (((0.0, 0.0), -2 * np.pi * beta),))
            pot_err = max(pot_err, np.max(np.abs(potential(PLANE, mu, z) - beta * np.log(np.linalg.norm(z, axis=1)))))
        # the CLI path: metric file in, distance CSV out
        z0s = [(0.5, 0.25), (-0.3, 0.6), (0.7, -0.1)]
        rel, nodes = 0.0, 0
        for beta in (-0.5, 0.5, 2.0):
            item = gallery.make_cone(2 * np.pi * (beta + 1), twin=False)
            nodes = C.graph(item.surface, 5).n_nodes
            mfile, pfile = tmp_path / "cone.json", tmp_path / "pairs.csv"
            io.save(item.surface, mfile)
            pfile.write_text("x1,y1,x2,y2\n" + "".join(f"0,0,{a},{b}\n" for a, b in z0s))
            code = cli.main(["distance", str(mfile), str(pfile), "--level", "5"])
            out = capsys.readouterr().out.splitlines()[2:]
            assert code == 0
            for line, z0 in zip(out, z0s):
                d = float(line.split(",")[-2])
                exact = np.hypot(*z0) ** (beta + 1) / (beta + 1)
                rel = max(rel, abs(d / exact - 1))
    ok = pot_err < 1e-12 and rel < 0.005 and nodes >= 10**5 and clk.elapsed < 60
    criterion(3, ok, f"cone: potential err {pot_err:.1e}, radial rel err {rel:.2%} with {nodes} nodes, {clk.elapsed:.1f}s")
    assert ok


def test_c04_green_kernel(criterion):
    rng = np.random.default_rng(1)
    with Clock() as clk:
        x, y = unit(rng, 1000), unit(rng, 1000)
        symmetric = bool(np.array_equal(green_sphere(x, y), green_sphere(y, x)))
        zm = max(abs(zero_mean_residual(p, 64)) for p in unit(rng, 10))
        ev = unit(rng, 20)
        e1 = np.max(np.abs(reproduce_smooth(lambda p: p[:, 2], lambda p: 2 * p[:, 2], ev, 64) - ev[:, 2]))
        f2 = lambda p: p[:, 0] * p[:, 1]
        e2 = np.max(np.abs(reproduce_smooth(f2, lambda p: 6 * f2(p), ev, 64) - f2(ev)))
    ok = symmetric and zm < 1e-6 and max(e1, e2) < 1e-4 and clk.elapsed < 30
    criterion(4, ok, f"green: symmetric={symmetric}, zero mean {zm:.1e}, "
                     f"reproduce deg1 {e1:.1e} deg2 {e2:.1e}, {clk.elapsed:.1f}s")
    assert ok


def test_c05_liouville(criterion):
    with Clock() as clk:
        m = gallery.make_hemisphere_cylinder().surface
        X, Y, K = C.gaussian_curvature(m, shape=(512, 512))
        r = np.hypot(X, Y)
        inner = np.nanmax(np.abs(K[r < 0.9] - 1))
        outer = np.nanmax(np.abs(K[(r > 1.1) & (r < 2)]))
    ok = max(inner, outer) < 1e-3 and clk.elapsed < 30
    criterion(5, ok, f"liouville: |K - 1| = {inner:.1e} inside, |K| = {outer:.1e} outside, {clk.elapsed:.1f}s")
    assert ok


def test_c06_round(criterion):
    rng = np.random.default_rng(2)
    with Clock() as clk:
        m = C.classify_construct(SPHERE, area_measure("sphere"))
        P = unit(rng, 50)
        D = C.distance_table(m, np.vstack([P, -P]), 5)
        rel = np.max(np.abs(np.diag(D[:50, 50:]) / np.pi - 1))
    ok = rel < 0.01 and clk.elapsed < 120
    criterion(6, ok, f"round: 50 antipodal pairs, max |d/pi - 1| = {rel:.2%} at level 5, {clk.elapsed:.1f}s")
    assert ok


def test_c07_football(criterion):
    with Clock() as clk:
        m = gallery.make_football(np.pi).surface
        d = C.distance(m, (0.0, 0.0, 1.0), (0.0, 0.0, -1.0), 5)
    rel = abs(d / np.pi - 1)
    ok = rel < 0.01 and clk.elapsed < 120
    criterion(7, ok, f"football: cone-point distance {d:.6f}, rel err {rel:.2%}, {clk.elapsed:.1f}s")
    assert ok


def test_c08_scale_uniqueness(criterion):
    rng = np.random.default_rng(3)
    with Clock() as clk:
        omega = gallery.make_tetrahedral().analytic_curvature
        P = unit(rng, 21)
        iu = np.triu_indices(21, 1)
        base = C.classify_construct(SPHERE, omega)
        T0 = C.distance_table(base, P, 3)[iu]
        worst = 0.0
        for c in (-1.3, 0.37, 2.0):
            T1 = C.distance_table(C.classify_construct(SPHERE, omega, offset=c), P, 3)[iu]
            worst = max(worst, np.max(np.abs(T1 / T0 / np.exp(c) - 1)))
    ok = len(T0) >= 200 and worst < 1e-10 and clk.elapsed < 60
    criterion(8, ok, f"scale: {len(T0)} pairs, max |ratio e^-c - 1| = {worst:.1e}, {clk.elapsed:.1f}s")
    assert ok


def invalid_inputs(rng, n=50):
    """Mixed batch of (background, omega, expected error)."""
    cases = []
    for i in range(n):
        kind = i % 3
        if kind == 0:
            # wrong total mass on the sphere
            pts = unit(rng, rng.integers(1, 5))
            m = rng.uniform(-2, 2, size=len(pts))
            total = 4 * np.pi + rng.choice([-1, 1]) * rng.uniform(0.01, 5)
            m = m - m.sum() / len(m) + total / len(m)
            omega = SignedMeasure("sphere", tuple(zip(map(tuple, pts), m)))
            cases.append((SPHERE, omega, BalanceViolationError))
        elif kind == 1:
            # balanced, with one atom of mass at least 2 pi
            pts = unit(rng, 3)
            heavy = 2 * np.pi if i % 2 else rng.uniform(2 * np.pi, 6 * np.pi)
            a, b = rng.uniform(-1, 1, size=2)
            rest = 4 * np.pi - heavy - a - b
            omega = SignedMeasure("sphere", ((tuple(pts[0]), heavy), (tuple(pts[1]), a), (tuple(pts[2]), b)))
            omega = omega + area_measure("sphere", density=rest / (4 * np.pi))
            cases.append((SPHERE, omega, InadmissibleAtomError))
        else:
            pts = rng.uniform(size=(2, 2))
            m = rng.uniform(0.1, 1.0) * rng.choice([-1, 1])
            omega = SignedMeasure("torus", ((tuple(pts[0]), m),))
            cases.append((TORUS, omega, BalanceViolationError))
    return cases


def test_c09_admissibility(criterion):
    rng = np.random.default_rng(4)
    with Clock() as clk:
        cases = invalid_inputs(rng)
        hits = 0
        for bg, omega, err in cases:
            try:
                C.classify_construct(bg, omega)
            except err:
                hits += 1
            except Exception:
                pass
    ok = hits == len(cases) == 50 and clk.elapsed < 5
    criterion(9, ok, f"admissibility: {hits}/{len(cases)} rejected with the right error class, {clk.elapsed:.2f}s")
    assert ok


def test_c10_convergence(criterion):
    with Clock() as clk:
        rep = cv.polyhedral_approximation_experiment(k_max=4, sample_size=32)
    uni, weak, tot = rep.column("uniform_lb"), rep.column("weak_lb"), rep.column("total_defect")
    dec = bool(np.all(np.diff(uni) < 0) and np.all(np.diff(weak) < 0))
    tot_err = np.max(np.abs(tot - 4 * np.pi))
    ok = dec and tot_err < 1e-9 and clk.elapsed < 600
    criterion(10, ok, f"convergence: uniform {np.array2string(uni, precision=4)}, "
                      f"weak {np.array2string(weak, precision=4)}, defect err {tot_err:.1e}, {clk.elapsed:.0f}s")
    assert ok


def test_c11_lantern(criterion):
    with Clock() as clk:
        sq = [abs(gallery.lantern_area(n, n) / (2 * np.pi) - 1) for n in (64, 128, 256)]
        cubic = {m: gallery.lantern_area(m**3, m) / (2 * np.pi) for m in range(3, 33)}
        over = [m for m, v in cubic.items() if v > 10]
    ok = max(sq) < 0.01 and bool(over) and clk.elapsed < 60
    criterion(11, ok, f"lantern: square max rel err {max(sq):.2%} for n >= 64, "
                      f"cubic area/2pi > 10 first at m = {over[0] if over else None}, {clk.elapsed:.1f}s")
    assert ok


def test_c12_pseudometric(criterion):
    rng = np.random.default_rng(5)
    surfaces = {
        "cube": gallery.make_cube(1.0).surface,
        "can": gallery.make_can(1.0, 2.0).approximation,
        "icosphere": gallery.make_icosphere(2).surface,
    }
    tol = 1e-9
    with Clock() as clk:
        n_triples, worst = 0, {"symmetry": 0.0, "triangle": 0.0, "monotone": 0.0}
        for i, s in enumerate(surfaces.values()):
            fi = rng.integers(0, len(s.faces), size=40)
            bary = rng.dirichlet(np.ones(3), size=40)
            Dk = point_distance_table(s, fi, bary, 3)
            Dk1 = point_distance_table(s, fi, bary, 4)
            count = 334 if i < 2 else 332
            a, b, c = rng.integers(0, 40, size=(3, count))
            n_triples += count
            worst["symmetry"] = max(worst["symmetry"], np.max(np.abs(Dk[a, b] - Dk[b, a])))
            worst["triangle"] = max(worst["triangle"], np.max(Dk[a, c] - Dk[a, b] - Dk[b, c]),
                                    np.max(Dk1[a, c] - Dk1[a, b] - Dk1[b, c]))
            worst["monotone"] = max(worst["monotone"], np.max(Dk1[a, b] - Dk[a, b]))
    ok = n_triples == 1000 and all(v <= tol for v in worst.values()) and clk.elapsed < 300
    detail = ", ".join(f"{k} {max(v, 0.0):.1e}" for k, v in worst.items())
    criterion(12, ok, f"pseudometric: {n_triples} triples on {'/'.join(surfaces)}, worst {detail}, {clk.elapsed:.1f}s")
    assert ok
