"""File schemas and report serialization.

Graph documents::

    {"states": ["s1", ...], "edges": [{"from": "s1", "to": "s2"}, ...],
     "potentials": {"name": [value per edge, ...]}}

Representation documents::

    {"rank": 2, "dim": d, "generators": [[row-major entries], ...], "label": ...}

with an optional ``"derivatives"`` list (same layout) describing the linear
family ``A + s V``.  Functionals are ``{"preset": "alpha1"}`` or
``{"coeffs": [...]}``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .reps import LengthFunctional, MatrixRep, RepFamily, functional_preset
from .sft import EdgePotential, SubshiftGraph, build_subshift


class ParseError(Exception):
    """Input file does not match its schema."""


def _load_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")
    return data


def _require(data: dict, key: str, where) -> object:
    if key not in data:
        raise ParseError(f"{where}: missing field {key!r}")
    return data[key]


class GraphDocument:
    def __init__(self, graph: SubshiftGraph, potentials: dict):
        self.graph = graph
        self.potentials = potentials

    def potential(self, name: str | None) -> tuple[str, EdgePotential]:
        if name is None:
            if not self.potentials:
                raise ParseError("graph file has no potentials")
            name = next(iter(self.potentials))
        if name not in self.potentials:
            raise ParseError(f"potential {name!r} not in file (have {sorted(self.potentials)})")
        return name, self.graph.potential(self.potentials[name])


def parse_graph(data: dict, where="graph", reuse: SubshiftGraph | None = None) -> GraphDocument:
    states = _require(data, "states", where)
    edges_raw = _require(data, "edges", where)
    if not isinstance(states, list) or not isinstance(edges_raw, list):
        raise ParseError(f"{where}: states and edges must be lists")
    edges = []
    for k, e in enumerate(edges_raw):
        if not isinstance(e, dict) or "from" not in e or "to" not in e:
            raise ParseError(f"{where}: edge {k} needs 'from' and 'to'")
        edges.append((e["from"], e["to"]))
    if reuse is not None and list(reuse.states) == states and list(reuse.edges_by_name()) == edges:
        graph = reuse
    else:
        graph = build_subshift(states, edges)
    pots = {}
    for name, vals in dict(data.get("potentials", {})).items():
        if not isinstance(vals, list) or len(vals) != graph.n_edges:
            raise ParseError(f"{where}: potential {name!r} needs one value per edge ({graph.n_edges})")
        try:
            pots[name] = [float(v) for v in vals]
        except (TypeError, ValueError):
            raise ParseError(f"{where}: potential {name!r} has non-numeric entries") from None
    return GraphDocument(graph, pots)


def load_graph(path, reuse: SubshiftGraph | None = None) -> GraphDocument:
    return parse_graph(_load_json(path), str(path), reuse)


def graph_to_dict(g: SubshiftGraph, potentials: dict | None = None) -> dict:
    return {
        "states": list(g.states),
        "edges": [{"from": a, "to": b} for a, b in g.edges_by_name()],
        "potentials": {k: list(map(float, v)) for k, v in (potentials or {}).items()},
    }


def _matrices(data: dict, key: str, d: int, where) -> list[np.ndarray]:
    raw = _require(data, key, where)
    out = []
    for k, m in enumerate(raw):
        arr = np.asarray(m, dtype=float)
        if arr.size != d * d:
            raise ParseError(f"{where}: {key}[{k}] needs {d * d} entries")
        out.append(arr.reshape(d, d))
    return out


def parse_rep(data: dict, where="representation") -> MatrixRep:
    try:
        d = int(_require(data, "dim", where))
        gens = _matrices(data, "generators", d, where)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: {exc}") from None
    if "rank" in data and int(data["rank"]) != len(gens):
        raise ParseError(f"{where}: rank {data['rank']} but {len(gens)} generators")
    return MatrixRep(gens, label=data.get("label"))


def load_rep(path) -> MatrixRep:
    return parse_rep(_load_json(path), str(path))


def load_family(path) -> RepFamily:
    data = _load_json(path)
    rep = parse_rep(data, str(path))
    if "derivatives" not in data:
        raise ParseError(f"{path}: family files need a 'derivatives' field")
    vel = _matrices(data, "derivatives", rep.dim, str(path))
    if len(vel) != rep.rank:
        raise ParseError(f"{path}: one derivative per generator required")
    gens = [np.asarray(m, dtype=float).reshape(rep.dim, rep.dim) for m in data["generators"]]
    return RepFamily.linear(gens, vel, label=rep.label)


def rep_to_dict(rep: MatrixRep) -> dict:
    return rep.to_dict()


def parse_functional(source, d: int) -> LengthFunctional:
    """Preset name, inline JSON object, or path to a functional JSON file."""
    if isinstance(source, str):
        text = source.strip()
        if text.startswith("{"):
            try:
                source = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ParseError(f"functional: invalid JSON ({exc.msg})") from None
        elif os.path.isfile(text):
            source = _load_json(text)
        else:
            return functional_preset(text, d)
    if "preset" in source:
        return functional_preset(str(source["preset"]), d)
    if "coeffs" in source:
        coeffs = np.asarray(source["coeffs"], dtype=float)
        if coeffs.shape != (d,):
            raise ParseError(f"functional: expected {d} coefficients, got {coeffs.size}")
        return LengthFunctional(coeffs, str(source.get("tag", "custom")))
    raise ParseError("functional: need 'preset' or 'coeffs'")


def _fmt(x: float, digits: int) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    s = format(x, f".{digits}g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps_json(obj, digits: int = 17, indent: int = 2, _level: int = 0) -> str:
    """JSON with floats written at ``digits`` significant digits."""
    obj = _plain(obj)
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt(obj, digits)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps_json(v, digits, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(_plain(v), (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps_json(v, digits) for v in obj) + "]"
        items = [pad + dumps_json(v, digits, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_csv(header: list, rows: list, digits: int = 12) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v, digits) if isinstance(_plain(v), float) else _plain(v) for v in row])
    return buf.getvalue()


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
