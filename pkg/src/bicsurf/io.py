"""JSON and CSV serialisation of measures, meshes, metrics and reports.

Floats are written with ``repr`` so files round-trip exactly and reruns are
byte-identical. Every document starts with a ``header`` entry (JSON) or a
``# ...`` line (CSV) naming the tool version, the command and the seed.
"""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path

import numpy as np

from . import __version__
from .conformal import ConformalMetric, GridPotential, SingularPoint
from .errors import InputError
from .green import background
from .measure import (
    CapDensity,
    ConstDensity,
    CurvePart,
    DiscDomain,
    ExprDensity,
    FieldDensity,
    GridDensity,
    RectDomain,
    SignedMeasure,
    SphereDomain,
    ZonalDensity,
)
from .polyhedral import ConeSurface


class ParseError(InputError, ValueError):
    """Malformed or unreadable input file."""


def header(command="", seed=None):
    return f"bicsurf {__version__} | {command} | seed={seed if seed is not None else 'none'}"


def _f(x):
    return float(x)


# ---------------------------------------------------------------------------
# measures


def _domain_to_json(d):
    if isinstance(d, SphereDomain):
        return {"kind": "sphere", "n_theta": d.n_theta, "n_phi": d.n_phi, "axis": list(d.axis),
                "pole_exponent": d.pole_exponent}
    if isinstance(d, DiscDomain):
        return {"kind": "disc", "center": list(d.center), "radius": d.radius, "n_r": d.n_r, "n_phi": d.n_phi,
                "radial": d.radial}
    if isinstance(d, RectDomain):
        return {"kind": "rect", "x0": d.x0, "x1": d.x1, "y0": d.y0, "y1": d.y1, "nx": d.nx, "ny": d.ny}
    raise ParseError(f"cannot serialise domain {d!r}")


def _domain_from_json(d):
    d = dict(d)
    kind = d.pop("kind")
    if kind == "sphere":
        return SphereDomain(d["n_theta"], d["n_phi"], tuple(d["axis"]), d.get("pole_exponent", 0.0))
    if kind == "disc":
        return DiscDomain(tuple(d["center"]), d["radius"], d["n_r"], d["n_phi"], d.get("radial", "linear"))
    if kind == "rect":
        return RectDomain(d["x0"], d["x1"], d["y0"], d["y1"], d["nx"], d["ny"])
    raise ParseError(f"unknown domain kind {kind!r}")


def _ac_to_json(p):
    if isinstance(p, FieldDensity):
        return {"kind": "field", "expr": p.expr, "coefficient": _f(p.coefficient), "domain": _domain_to_json(p.domain)}
    if isinstance(p, ZonalDensity):
        return {"kind": "zonal", "expr": p.expr, "axis": list(p.axis), "exponents": list(p.exponents),
                "n_z": p.n_z, "n_phi": p.n_phi, "coefficient": _f(p.coefficient)}
    if isinstance(p, CapDensity):
        return {"kind": "cap", "center": list(p.center), "radius": _f(p.radius), "mass": _f(p.mass),
                "n_r": p.n_r, "n_phi": p.n_phi}
    if isinstance(p, GridDensity):
        return {"kind": "grid", "x0": p.x0, "x1": p.x1, "y0": p.y0, "y1": p.y1, "values": p.values.tolist()}
    raise ParseError(f"cannot serialise ac part {type(p).__name__}")


def _ac_from_json(d):
    kind = d.get("kind")
    if kind == "field":
        return FieldDensity(d["expr"], _domain_from_json(d["domain"]), coefficient=d.get("coefficient", 1.0))
    if kind == "zonal":
        return ZonalDensity(d["expr"], tuple(d.get("axis", (0, 0, 1))), tuple(d.get("exponents", (0, 0))),
                            d.get("n_z", 128), d.get("n_phi", 256), d.get("coefficient", 1.0))
    if kind == "cap":
        return CapDensity(tuple(d["center"]), d["radius"], d["mass"], d.get("n_r", 32), d.get("n_phi", 64))
    if kind == "grid":
        return GridDensity(d["x0"], d["x1"], d["y0"], d["y1"], np.array(d["values"], dtype=float))
    raise ParseError(f"unknown ac part kind {kind!r}")


def _curve_to_json(c):
    out = {"density": c.density.to_json(), "order": c.order}
    if c.circle is not None:
        center, radius, normal = c.circle
        out["circle"] = {"center": list(center), "radius": radius, "normal": None if normal is None else list(normal)}
    else:
        out["polyline"] = c.polyline.tolist()
    return out


def _curve_from_json(d):
    dens = d["density"]
    if dens["kind"] == "const":
        density = ConstDensity(dens["value"])
    elif dens["kind"] == "expr":
        density = ExprDensity(dens["expr"], coefficient=dens.get("coefficient", 1.0))
    else:
        raise ParseError(f"unknown curve density kind {dens['kind']!r}")
    if "circle" in d:
        c = d["circle"]
        return CurvePart(density, circle=(tuple(c["center"]), c["radius"], c.get("normal")), order=d.get("order", 8))
    return CurvePart(density, polyline=np.array(d["polyline"], dtype=float), order=d.get("order", 8))


def measure_to_json(mu: SignedMeasure):
    return {
        "type": "measure",
        "carrier": mu.carrier,
        "atoms": [{"point": [_f(c) for c in a.point], "mass": _f(a.mass)} for a in mu.atoms],
        "curves": [_curve_to_json(c) for c in mu.curves],
        "ac": [_ac_to_json(p) for p in mu.ac],
    }


def measure_from_json(d) -> SignedMeasure:
    try:
        atoms = tuple((tuple(a["point"]), float(a["mass"])) for a in d.get("atoms", ()))
        curves = tuple(_curve_from_json(c) for c in d.get("curves", ()))
        ac = tuple(_ac_from_json(p) for p in d.get("ac", ()))
        return SignedMeasure(d["carrier"], atoms, curves, ac)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed measure: {exc}") from exc


# ---------------------------------------------------------------------------
# meshes and metrics


def mesh_to_json(s: ConeSurface):
    return {
        "type": "mesh",
        "name": s.name,
        "vertices": int(s.n_vertices),
        "faces": np.asarray(s.faces).tolist(),
        "edge_lengths": [[f"{i}-{j}", _f(l)] for (i, j), l in sorted(s.edge_lengths.items())],
        "positions": None if s.positions is None else np.asarray(s.positions).tolist(),
    }


def _edge_key(k):
    i, j = (int(c) for c in str(k).split("-"))
    return (min(i, j), max(i, j))


def mesh_from_json(d) -> ConeSurface:
    try:
        lengths = {_edge_key(k): float(v) for k, v in d["edge_lengths"]}
        pos = d.get("positions")
        return ConeSurface(
            int(d["vertices"]), np.array(d["faces"], dtype=np.int64), lengths,
            None if pos is None else np.array(pos, dtype=float), d.get("name", "mesh"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed mesh: {exc}") from exc


def metric_to_json(m: ConformalMetric):
    out = {
        "type": "metric",
        "name": m.name,
        "background": m.background.kind,
        "kind": m.kind,
        "offset": _f(m.offset),
        "scale": _f(m.scale),
        "domain": None if m.domain is None else [_f(c) for c in m.domain],
        "singular": [
            {"point": list(sp.point), "mass": _f(sp.mass), "finite": sp.finite, "tail": sp.tail} for sp in m.singular
        ],
    }
    if m.kind == "measure":
        out["measure"] = measure_to_json(m.measure)
    elif m.kind == "closed":
        if m.expr is None:
            raise ParseError("closed-form metrics given by a callable cannot be serialised")
        out["expr"] = m.expr
    else:
        g = m.grid
        out["grid"] = {"x0": g.x0, "x1": g.x1, "y0": g.y0, "y1": g.y1, "values": np.asarray(g.values).tolist(),
                       "periodic": g.periodic}
    if m.source_curvature is not None:
        out["source_curvature"] = measure_to_json(m.source_curvature)
    return out


def metric_from_json(d) -> ConformalMetric:
    try:
        kw = {}
        if d["kind"] == "measure":
            kw["measure"] = measure_from_json(d["measure"])
        elif d["kind"] == "closed":
            kw["expr"] = d["expr"]
        elif d["kind"] == "grid":
            g = d["grid"]
            kw["grid"] = GridPotential(g["x0"], g["x1"], g["y0"], g["y1"], np.array(g["values"], dtype=float),
                                       g.get("periodic", False))
        else:
            raise ParseError(f"unknown metric kind {d['kind']!r}")
        sing = tuple(
            SingularPoint(tuple(s["point"]), s["mass"], s.get("finite"), s.get("tail")) for s in d.get("singular", ())
        )
        src = d.get("source_curvature")
        return ConformalMetric(
            background(d["background"]), d["kind"], offset=d.get("offset", 0.0), scale=d.get("scale", 1.0),
            singular=sing, domain=None if d.get("domain") is None else tuple(d["domain"]),
            source_curvature=None if src is None else measure_from_json(src), name=d.get("name", ""), **kw,
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed metric: {exc}") from exc


_DECODERS = {"measure": measure_from_json, "mesh": mesh_from_json, "metric": metric_from_json}


def to_json(obj):
    if isinstance(obj, SignedMeasure):
        return measure_to_json(obj)
    if isinstance(obj, ConeSurface):
        return mesh_to_json(obj)
    if isinstance(obj, ConformalMetric):
        return metric_to_json(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def from_json(d):
    if not isinstance(d, dict) or d.get("type") not in _DECODERS:
        raise ParseError("document has no recognised 'type' (measure, mesh or metric)")
    return _DECODERS[d["type"]](d)


def dumps(obj, command="", seed=None):
    doc = {"header": header(command, seed)}
    doc.update(obj if isinstance(obj, dict) else to_json(obj))
    return json.dumps(doc, indent=1) + "\n"


def save(obj, path, command="", seed=None):
    Path(path).write_text(dumps(obj, command, seed))


def load(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    return from_json(doc)


# ---------------------------------------------------------------------------
# CSV


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "" if v is None else str(v)


def csv_text(columns, rows, head=None):
    buf = _io.StringIO()
    if head is not None:
        buf.write(f"# {head}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def write_csv(path, columns, rows, head=None):
    text = csv_text(columns, rows, head)
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv(path):
    """Return ``(header_line or None, columns, rows as lists of strings)``."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    head = None
    if lines and lines[0].startswith("#"):
        head = lines[0][1:].strip()
        lines = lines[1:]
    rows = list(csv.reader(lines))
    if not rows:
        raise ParseError(f"{path}: empty CSV")
    return head, rows[0], rows[1:]
