"""Compiled versus pure-Python kernel timings.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``. Each kernel is
called on identical inputs with both backends; the table reports the best
of ``N`` wall times and the maximum absolute difference of the outputs.
"""

import argparse
import timeit

import numpy as np

from bicsurf import _backend


def unit(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def cases(rng):
    n, m = 2000, 4000
    Xs, Ys = unit(rng, n), unit(rng, m)
    Xt, Yt = rng.uniform(size=(n, 2)), rng.uniform(size=(m, 2))
    w, fy, fx = rng.uniform(size=m), rng.normal(size=m), rng.normal(size=n)
    D = rng.uniform(-1, 1, size=(20000, 2))
    return {
        "sphere_green_sum": (Xs, Ys, w, fy, fx),
        "plane_log_sum": (Xt * 4 - 2, Yt * 4 - 2, fy),
        "torus_green_exact": (D,),
        "torus_green_sum": (Xt[:500], Yt[:1000], w[:1000], fy[:1000], fx[:500]),
        "torus_fourier": (D[:2000], 64),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _backend._compiled is None:
        print("compiled kernels are not built; only the python backend is available")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<20}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>10}{'max |diff|':>12}")
    for name, inp in cases(rng).items():
        fn = getattr(_backend, name)
        t_py = min(timeit.repeat(lambda: fn(*inp, backend="python"), number=1, repeat=args.repeat))
        if _backend._compiled is None:
            print(f"{name:<20}{t_py:>12.4f}{'-':>14}{'-':>10}{'-':>12}")
            continue
        t_c = min(timeit.repeat(lambda: fn(*inp, backend="compiled"), number=1, repeat=args.repeat))
        diff = np.max(np.abs(fn(*inp, backend="python") - fn(*inp, backend="compiled")))
        print(f"{name:<20}{t_py:>12.4f}{t_c:>14.4f}{t_py / t_c:>10.1f}{diff:>12.1e}")


if __name__ == "__main__":
    main()
