"""Command-line front end: ``bic <subcommand> ...``.

Exit codes: 0 success, 1 mathematical or admissibility failure, 2 I/O or
parse failure. Every output file starts with a header naming the tool
version, the command line and the seed.
"""

from __future__ import annotations

import argparse
import inspect
import json
import sys
from pathlib import Path

import numpy as np

from . import conformal, convergence, gallery, green, io, polyhedral
from .errors import BICError, InfiniteLengthError, IndeterminateSingularityError, InputError, UnreachableError
from .measure import SignedMeasure, gauss_bonnet_residual

EXIT_OK, EXIT_MATH, EXIT_IO = 0, 1, 2

DEFAULT_LEVEL = 4
DEFAULT_TOL = 1e-9


class UsageError(InputError):
    pass


def _command_line(argv):
    return "bic " + " ".join(argv)


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise io.ParseError(f"cannot write {out}: {exc}") from exc


# ---------------------------------------------------------------------------
# gb-check


def _default_chi(carrier):
    return {"sphere": 2, "torus": 0}.get(carrier)


def cmd_gb_check(args, cmdline):
    obj = io.load(args.file)
    report = {"header": io.header(cmdline, None)}
    if isinstance(obj, polyhedral.ConeSurface):
        rep = polyhedral.validate(obj)
        if rep:
            raise io.ParseError("invalid mesh: " + "; ".join(rep.issues()))
        defects = polyhedral.vertex_defects(obj)
        chi = polyhedral.euler_characteristic(obj)
        residual = float(defects.sum() - 2 * np.pi * chi)
        report.update({"kind": "mesh", "euler_characteristic": chi, "total_defect": float(defects.sum())})
        if obj.positions is not None:
            # compare with the defects of the embedding the lengths were taken from
            ref = polyhedral.vertex_defects(polyhedral.ConeSurface.from_positions(obj.positions, obj.faces))
            changed = bool(np.max(np.abs(ref - defects)) > args.tol)
            report["defects_changed"] = changed
            report["max_defect_change"] = float(np.max(np.abs(ref - defects)))
    elif isinstance(obj, SignedMeasure):
        chi = args.chi if args.chi is not None else _default_chi(obj.carrier)
        if chi is None:
            raise UsageError(f"carrier {obj.carrier!r} needs an explicit --chi")
        residual = float(gauss_bonnet_residual(obj, chi))
        report.update({"kind": "measure", "euler_characteristic": chi})
    else:
        raise UsageError("gb-check expects a mesh or a measure file")
    ok = abs(residual) < args.tol
    report.update({"residual": residual, "tolerance": args.tol, "ok": ok})
    _emit(json.dumps(report, indent=1) + "\n", args.out)
    return EXIT_OK if ok else EXIT_MATH


# ---------------------------------------------------------------------------
# distance


def _read_pairs(path, dim):
    head, cols, rows = io.read_csv(path)
    try:
        vals = np.array([[float(c) for c in r] for r in rows if r], dtype=float)
    except ValueError as exc:
        raise io.ParseError(f"{path}: non-numeric entry ({exc})") from exc
    if vals.ndim != 2 or vals.shape[1] != 2 * dim:
        raise io.ParseError(f"{path}: expected {2 * dim} columns per pair, got {len(cols)}")
    return cols, vals


def cmd_distance(args, cmdline):
    surf = io.load(args.surface)
    if isinstance(surf, polyhedral.ConeSurface):
        cols, pairs = _read_pairs(args.pairs, 1)
        dim = 1
    elif isinstance(surf, conformal.ConformalMetric):
        dim = 3 if surf.background.kind == "sphere" else 2
        cols, pairs = _read_pairs(args.pairs, dim)
    else:
        raise UsageError("distance expects a mesh or a metric file")
    rows = []
    failed = False
    mesh = dim == 1
    for i, pq in enumerate(pairs):
        p, q = pq[:dim], pq[dim:]
        status, d = "ok", None
        try:
            if dim == 1:
                d = polyhedral.intrinsic_distance(surf, int(p[0]), int(q[0]), args.level)
            else:
                d = conformal.distance(surf, p, q, refinement_level=args.level)
        except IndeterminateSingularityError:
            status = "indeterminate"
        except InfiniteLengthError:
            status = "at-infinity"
        except UnreachableError:
            status = "unreachable"
        except BICError as exc:
            if isinstance(exc, InputError):
                raise
            status = type(exc).__name__
        if status != "ok":
            failed = True
        if mesh:
            rows.append((int(p[0]), int(q[0]), args.level, d, status))
        else:
            rows.append((i, *pq.tolist(), args.level, d, status))
    out_cols = ["p", "q"] if mesh else ["pair", *cols]
    out_cols += ["level", "distance", "status"]
    _emit(io.csv_text(out_cols, rows, io.header(cmdline, None)), args.out)
    return EXIT_MATH if failed else EXIT_OK


# ---------------------------------------------------------------------------
# classify


def cmd_classify(args, cmdline):
    omega = io.load(args.measure)
    if not isinstance(omega, SignedMeasure):
        raise UsageError("classify expects a measure file")
    bg = green.background(args.background or omega.carrier)
    try:
        metric = conformal.classify_construct(bg, omega, name=Path(args.measure).stem)
    except BICError as exc:
        if isinstance(exc, InputError):
            raise
        point = getattr(exc, "point", None)
        kind = {"BalanceViolationError": "balance-violation", "InadmissibleAtomError": "inadmissible-atom"}.get(
            type(exc).__name__, type(exc).__name__
        )
        msg = f"{kind}: {exc}"
        if point is not None:
            msg += f" (point {tuple(point)})"
        print(msg, file=sys.stderr)
        return EXIT_MATH
    _emit(io.dumps(metric, cmdline, None), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# converge


def cmd_converge(args, cmdline):
    if args.experiment == "icosphere":
        rep = convergence.polyhedral_approximation_experiment(args.kmax, args.sample_size, args.seed, args.steiner)
    elif args.experiment == "mollify":
        if args.measure:
            omega = io.load(args.measure)
        else:
            omega = gallery.make_tetrahedral().analytic_curvature
        eps = [float(e) for e in args.eps.split(",")] if args.eps else [2.0 ** -k for k in range(3, 8)]
        rep = convergence.mollification_experiment(omega, eps, args.sample_size, args.seed, args.level)
    elif args.experiment == "lantern":
        rep = convergence.lantern_experiment(args.mode, args.mmax)
    else:  # argparse restricts choices
        raise UsageError(f"unknown experiment {args.experiment!r}")
    _emit(rep.to_csv(command=cmdline), args.out)
    return EXIT_OK if rep.passed else EXIT_MATH


# ---------------------------------------------------------------------------
# gallery


def _parse_params(ctor, extra):
    sig = inspect.signature(ctor)
    params = {}
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--"):
            raise UsageError(f"unexpected argument {tok!r}")
        key = tok[2:].replace("-", "_")
        if "=" in key:
            key, val = key.split("=", 1)
        else:
            try:
                val = next(it)
            except StopIteration:
                raise UsageError(f"missing value for {tok}") from None
        if key not in sig.parameters:
            raise UsageError(f"unknown parameter {key!r}; accepted: {list(sig.parameters)}")
        default = sig.parameters[key].default
        try:
            if isinstance(default, bool):
                params[key] = val.lower() in ("1", "true", "yes")
            elif isinstance(default, int):
                params[key] = int(val)
            else:
                params[key] = float(val)
        except ValueError:
            raise UsageError(f"bad value {val!r} for {key}") from None
    return params


def gallery_files(item, outdir, cmdline):
    """Write ``<name>_surface.json``, ``<name>_measure.json`` and ``<name>_references.csv``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    surf = item.surface
    if isinstance(surf, gallery.PiecewiseSmooth):
        surf = item.approximation
    paths = (
        outdir / f"{item.name}_surface.json",
        outdir / f"{item.name}_measure.json",
        outdir / f"{item.name}_references.csv",
    )
    paths[0].write_text(io.dumps(surf, cmdline))
    paths[1].write_text(io.dumps(item.analytic_curvature, cmdline))
    rows = [(r.quantity, float(r.value), r.provenance) for r in item.references]
    rows.append(("euler_characteristic", item.euler_characteristic, "identity"))
    if item.mass_at_infinity is not None:
        rows.append(("mass_at_infinity", float(item.mass_at_infinity), "analytic"))
    paths[2].write_text(io.csv_text(("quantity", "value", "provenance"), rows, io.header(cmdline, None)))
    return paths


def cmd_gallery(args, extra, cmdline):
    name = args.name
    if name == "export":
        if not extra:
            raise UsageError("gallery export needs an item name")
        name, extra = extra[0], extra[1:]
    if name not in gallery.CONSTRUCTORS:
        raise UsageError(f"unknown gallery item {name!r}; known: {sorted(gallery.CONSTRUCTORS)}")
    ctor = gallery.CONSTRUCTORS[name]
    item = ctor(**_parse_params(ctor, extra))
    for p in gallery_files(item, args.out, cmdline):
        print(p)
    return EXIT_OK


# ---------------------------------------------------------------------------
# potential


def cmd_potential(args, cmdline):
    obj = io.load(args.measure)
    if not isinstance(obj, SignedMeasure):
        raise UsageError("potential expects a measure file")
    bg = green.background(args.background or obj.carrier)
    n = args.n
    if bg.kind == "sphere":
        theta = (np.arange(n) + 0.5) * np.pi / n
        phi = (np.arange(2 * n) + 0.5) * np.pi / n
        T, P = np.meshgrid(theta, phi, indexing="ij")
        X = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1).reshape(-1, 3)
        cols = ("x", "y", "z", "u")
    else:
        x0, x1, y0, y1 = (float(c) for c in args.bbox.split(",")) if args.bbox else (
            (0.0, 1.0, 0.0, 1.0) if bg.kind == "torus" else (-1.0, 1.0, -1.0, 1.0))
        xs = x0 + (np.arange(n) + 0.5) * (x1 - x0) / n
        ys = y0 + (np.arange(n) + 0.5) * (y1 - y0) / n
        Xg, Yg = np.meshgrid(xs, ys, indexing="xy")
        X = np.stack([Xg.ravel(), Yg.ravel()], axis=1)
        cols = ("x", "y", "u")
    u = green.potential(bg, obj, X, check=bg.closed)
    rows = [(*x.tolist(), float(v)) for x, v in zip(X, u)]
    _emit(io.csv_text(cols, rows, io.header(cmdline, None)), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="bic", description="Surfaces of bounded integral curvature.")
    p.add_argument("--version", action="version", version=f"bicsurf {io.__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gb-check", help="Gauss-Bonnet residual of a mesh or measure file")
    s.add_argument("file")
    s.add_argument("--tol", type=float, default=DEFAULT_TOL)
    s.add_argument("--chi", type=int, default=None, help="Euler characteristic (measures only)")
    s.add_argument("--out")

    s = sub.add_parser("distance", help="distances between point pairs on a mesh or metric")
    s.add_argument("surface")
    s.add_argument("pairs", help="CSV of pairs: 'p,q' vertex ids (mesh) or coordinates (metric)")
    s.add_argument("--level", type=int, default=DEFAULT_LEVEL)
    s.add_argument("--out")

    s = sub.add_parser("classify", help="metric with prescribed curvature measure")
    s.add_argument("measure")
    s.add_argument("--background", choices=("sphere", "torus"))
    s.add_argument("--out")

    s = sub.add_parser("converge", help="convergence experiments")
    s.add_argument("experiment", choices=("icosphere", "mollify", "lantern"))
    s.add_argument("--kmax", type=int, default=4)
    s.add_argument("--sample-size", type=int, default=32)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--steiner", type=int, default=convergence.DEFAULT_STEINER)
    s.add_argument("--level", type=int, default=3)
    s.add_argument("--eps", help="comma-separated mollification radii")
    s.add_argument("--measure", help="measure file for the mollification experiment")
    s.add_argument("--mode", choices=("square", "cubic"), default="square")
    s.add_argument("--mmax", type=int, default=64)
    s.add_argument("--out")

    s = sub.add_parser("gallery", help="export a gallery item: gallery <name> [--param value ...] --out dir")
    s.add_argument("name")
    s.add_argument("--out", default=".")

    s = sub.add_parser("potential", help="evaluate the potential of a measure on a grid")
    s.add_argument("measure")
    s.add_argument("--background", choices=("sphere", "torus", "plane"))
    s.add_argument("--n", type=int, default=32)
    s.add_argument("--bbox", help="x0,x1,y0,y1 for planar grids")
    s.add_argument("--out")
    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if extra and args.command != "gallery":
        print(f"bic: unrecognised arguments: {' '.join(extra)}", file=sys.stderr)
        return EXIT_IO
    cmdline = _command_line(argv)
    try:
        if args.command == "gb-check":
            return cmd_gb_check(args, cmdline)
        if args.command == "distance":
            return cmd_distance(args, cmdline)
        if args.command == "classify":
            return cmd_classify(args, cmdline)
        if args.command == "converge":
            return cmd_converge(args, cmdline)
        if args.command == "gallery":
            return cmd_gallery(args, extra, cmdline)
        return cmd_potential(args, cmdline)
    except InputError as exc:
        print(f"bic: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"bic: {exc}", file=sys.stderr)
        return EXIT_IO
    except BICError as exc:
        print(f"bic: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MATH


if __name__ == "__main__":
    sys.exit(main())
