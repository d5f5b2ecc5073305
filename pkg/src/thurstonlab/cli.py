"""Command-line front end.

Every command writes one report (JSON or CSV) to ``--out`` or stdout.
Exit status: 0 on success, 1 when ``self-test`` has failing checks, 2 on a
domain error, 3 on unreadable or malformed input.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import dataclass, field

from . import formats
from .errors import DomainError
from .flows import (
    FlowTangent,
    SuspensionFlow,
    dth_flow,
    finsler_norm_flow,
    flow_entropy,
    pressure_norm_flow,
)
from .optimize import max_cycle_ratio
from .repmetrics import (
    dth_reps,
    entropy_estimate,
    finsler_norm_reps,
    length_spectrum,
)
from .thermo import LIVSIC_TOL, livsic_reduce, pressure, topological_entropy
from .words import enumerate_classes, letter_name

COMMANDS = (
    "pressure",
    "entropy",
    "flow-entropy",
    "flow-dth",
    "flow-finsler",
    "max-cycle-ratio",
    "livsic-check",
    "enumerate-classes",
    "rep-lengths",
    "rep-entropy",
    "rep-dth",
    "rep-finsler",
    "self-test",
)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    input2: str | None = None
    potential: str | None = None
    potential2: str | None = None
    functional: str = "hilbert"
    cutoff: int = 8
    tol: float = LIVSIC_TOL
    seed: int = 0
    format: str = "json"
    out: str | None = None
    rank: int = 2
    primitive: bool = False
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.cutoff < 1:
            raise UsageError("--cutoff must be at least 1")
        if not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.format not in ("json", "csv"):
            raise UsageError("--format must be json or csv")

    def meta(self) -> dict:
        return {"command": self.command, "tol": self.tol, "cutoff": self.cutoff, "seed": self.seed}


@dataclass
class Report:
    fields: dict
    table: tuple | None = None  # (header, rows) for CSV output

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return formats.dumps_json(self.fields) + "\n"
        if self.table is not None:
            return formats.dumps_csv(*self.table)
        flat = [(k, v) for k, v in self.fields.items() if not isinstance(v, (dict, list))]
        return formats.dumps_csv(["key", "value"], flat)


def _need(path, flag="--input"):
    if not path:
        raise UsageError(f"{flag} is required for this command")
    return path


def _graph(cfg: RunConfig):
    return formats.load_graph(_need(cfg.input))


def _flows(cfg: RunConfig):
    doc1 = _graph(cfg)
    if cfg.input2:
        doc2 = formats.load_graph(cfg.input2, reuse=doc1.graph)
        name2 = cfg.potential2 or cfg.potential
    else:
        doc2, name2 = doc1, cfg.potential2
        if name2 is None:
            raise UsageError("give --input2 or --potential2 for the second roof")
    n1, r1 = doc1.potential(cfg.potential)
    n2, r2 = doc2.potential(name2)
    return SuspensionFlow(doc1.graph, r1), SuspensionFlow(doc2.graph, r2), (n1, n2)


def _states(cycle) -> list[str]:
    return [str(s) for s in cycle.state_sequence()]


def cmd_pressure(cfg):
    doc = _graph(cfg)
    name, f = doc.potential(cfg.potential)
    return Report({**cfg.meta(), "potential": name, "pressure": pressure(doc.graph, f)})


def cmd_entropy(cfg):
    doc = _graph(cfg)
    return Report({**cfg.meta(), "topological_entropy": topological_entropy(doc.graph)})


def cmd_flow_entropy(cfg):
    doc = _graph(cfg)
    name, r = doc.potential(cfg.potential)
    flow = SuspensionFlow(doc.graph, r)
    return Report({**cfg.meta(), "roof": name, "flow_entropy": flow_entropy(flow)})


def cmd_flow_dth(cfg):
    f1, f2, names = _flows(cfg)
    rep = dth_flow(f1, f2)
    return Report({**cfg.meta(), "roofs": list(names), **rep.to_dict()})


def cmd_flow_finsler(cfg):
    doc = _graph(cfg)
    name, r = doc.potential(cfg.potential)
    if cfg.potential2 is None:
        raise UsageError("--potential2 names the tangent direction")
    gname, g = doc.potential(cfg.potential2)
    flow = SuspensionFlow(doc.graph, r)
    tangent = FlowTangent.project(flow, g)
    res = max_cycle_ratio(doc.graph, tangent.direction, flow.roof)
    return Report(
        {
            **cfg.meta(),
            "roof": name,
            "direction": gname,
            "finsler_norm": finsler_norm_flow(flow, tangent),
            "optimizing_cycle": _states(res.cycle),
            "pressure_norm": pressure_norm_flow(flow, tangent),
        }
    )


def cmd_max_cycle_ratio(cfg):
    doc = _graph(cfg)
    n1, num = doc.potential(cfg.potential)
    if cfg.potential2 is None:
        n2, den = "ones", doc.graph.constant(1.0)
    else:
        n2, den = doc.potential(cfg.potential2)
    res = max_cycle_ratio(doc.graph, num, den)
    return Report(
        {**cfg.meta(), "numerator": n1, "denominator": n2, "value": res.value,
         "cycle": _states(res.cycle), "method": res.method}
    )


def cmd_livsic_check(cfg):
    doc = _graph(cfg)
    name, f = doc.potential(cfg.potential)
    res = livsic_reduce(doc.graph, f, tol=cfg.tol)
    fields = {
        **cfg.meta(),
        "potential": name,
        "is_coboundary": res.is_coboundary,
        "constant": res.c,
        "max_residual": res.max_residual,
        "transfer": {str(s): float(u) for s, u in zip(doc.graph.states, res.u)},
        "witness": _states(res.witness) if res.witness is not None else None,
    }
    return Report(fields)


def cmd_enumerate_classes(cfg):
    classes = list(enumerate_classes(cfg.rank, cfg.cutoff, primitive_only=cfg.primitive))
    rows = [(str(c), c.length, int(c.is_primitive)) for c in classes]
    fields = {**cfg.meta(), "rank": cfg.rank, "generating_set": _generating_set(cfg.rank), "primitive_only": cfg.primitive, "count": len(rows),
              "classes": [r[0] for r in rows]}
    return Report(fields, (["word", "length", "primitive_flag"], rows))


def _generating_set(rank: int) -> list[str]:
    # word-length cutoffs depend on this choice, so reports carry it
    return [letter_name(2 * i) for i in range(rank)]


def _rep_and_functional(cfg, path=None):
    rep = formats.load_rep(_need(path or cfg.input))
    return rep, formats.parse_functional(cfg.functional, rep.dim)


def cmd_rep_lengths(cfg):
    rep, f = _rep_and_functional(cfg)
    classes = list(enumerate_classes(rep.rank, cfg.cutoff, primitive_only=cfg.primitive))
    table = length_spectrum(rep, f, classes, cfg.cutoff)
    rows = [(str(c), c.length, float(v)) for c, v in zip(table.classes, table.values)]
    fields = {**cfg.meta(), "label": rep.label, "generating_set": _generating_set(rep.rank),
              "functional": f.tag, "lengths": table.as_dict()}
    return Report(fields, (["word", "length", "value"], rows))


def cmd_rep_entropy(cfg):
    rep, f = _rep_and_functional(cfg)
    est = entropy_estimate(rep, f, cfg.cutoff, primitive_only=cfg.primitive)
    return Report({**cfg.meta(), "label": rep.label, "generating_set": _generating_set(rep.rank),
                   "functional": f.tag, **est.to_dict(), "cutoff": cfg.cutoff})


def cmd_rep_dth(cfg):
    rep1, f = _rep_and_functional(cfg)
    rep2 = formats.load_rep(_need(cfg.input2, "--input2"))
    res = dth_reps(rep1, rep2, f, cfg.cutoff, primitive_only=cfg.primitive)
    rows = [(n, v) for n, v in res.trace]
    fields = {**cfg.meta(), "generating_set": _generating_set(rep1.rank), **res.to_dict()}
    return Report(fields, (["cutoff", "value"], rows))


def cmd_rep_finsler(cfg):
    family = formats.load_family(_need(cfg.input))
    f = formats.parse_functional(cfg.functional, family.base.dim)
    res = finsler_norm_reps(family, f, cfg.cutoff)
    return Report({**cfg.meta(), "generating_set": _generating_set(family.base.rank), "functional": f.tag,
                   **res.to_dict(), "cutoff": cfg.cutoff})


def cmd_self_test(cfg):
    from .selftest import run

    rows = [(name, bool(ok), float(val), float(tol)) for name, ok, val, tol in run(cfg.seed)]
    fields = {
        **cfg.meta(),
        "passed": all(r[1] for r in rows),
        "checks": [{"name": n, "passed": ok, "measured": v, "tolerance": t} for n, ok, v, t in rows],
    }
    return Report(fields, (["check", "passed", "measured", "tolerance"], rows))


HANDLERS = {name: globals()["cmd_" + name.replace("-", "_")] for name in COMMANDS}


def dispatch(cfg: RunConfig) -> tuple[int, Report]:
    cfg.validate()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = HANDLERS[cfg.command](cfg)
    notes = sorted({f"{w.category.__name__}: {w.message}" for w in caught})
    if notes:
        report.fields["warnings"] = notes
    status = 0
    if cfg.command == "self-test" and not report.fields["passed"]:
        status = 1
    return status, report


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(3)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="thurston", description="Pressure, cycle optimization and Thurston-type distances.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--input", help="graph or representation JSON")
    p.add_argument("--input2", help="second graph or representation JSON")
    p.add_argument("--functional", default="hilbert", help="preset name, JSON object or JSON file")
    p.add_argument("--cutoff", type=int, default=8, help="word-length cutoff")
    p.add_argument("--tol", type=float, default=LIVSIC_TOL, help="tolerance for cohomology checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="report path (stdout if omitted)")
    p.add_argument("--potential", help="potential or roof name in the graph file")
    p.add_argument("--potential2", help="second potential: denominator, direction or second roof")
    p.add_argument("--rank", type=int, default=2, help="free group rank for enumerate-classes")
    p.add_argument("--primitive", action="store_true", help="restrict to primitive classes")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(**vars(args))
    try:
        status, report = dispatch(cfg)
    except (formats.ParseError, UsageError) as exc:
        print(f"thurston: input error: {exc}", file=sys.stderr)
        return 3
    except DomainError as exc:
        print(f"thurston: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"thurston: invalid value: {exc}", file=sys.stderr)
        return 2
    text = report.render(cfg.format)
    if cfg.out:
        formats.write_atomic(cfg.out, text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
