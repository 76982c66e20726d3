"""Command-line front end: ``birknet {analyze,simulate,matrices,equilibria} FILE``.

Exit codes: 0 success, 1 parse/IO/usage error, 2 degenerate network,
3 integrator failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from fractions import Fraction

import numpy as np

from birknet import exact
from birknet.configspace import ChartError, InitialConditionError
from birknet.expr import DomainError
from birknet.graph import GraphError
from birknet.netlist import NetlistError, parse_netlist
from birknet.pipeline import (
    DEFAULT_DT,
    DEFAULT_T_END,
    DegenerateNetworkError,
    analyze,
    parse_coords,
    prepare,
    simulate,
)
from birknet.sim import write_csv
from birknet.stability import find_equilibria, seed_from_env

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DEGENERATE = 2
EXIT_INTEGRATOR = 3


class UsageError(Exception):
    pass


# JSON with 17 significant digits ----------------------------------------------


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _encode(obj, indent, level) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, float):
        if math.isfinite(obj):
            return format(obj, ".17g")
        return "null"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    return json.dumps(obj)


def dumps(obj, indent: int = 2) -> str:
    """JSON text with floats printed to 17 significant digits."""
    return _encode(_plain(obj), indent, 0) + "\n"


# helpers ----------------------------------------------------------------------


def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return parse_netlist(text)


def _coords(args, doc):
    if not args.coords:
        return None
    try:
        return parse_coords(args.coords, doc)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(text: str, out: str | None) -> None:
    if out:
        try:
            with open(out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise UsageError(f"cannot write {out}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


def _rational(v) -> str:
    f = Fraction(float(v))
    g = f.limit_denominator(10**6)
    if abs(float(g) - float(v)) <= 1e-15 * max(1.0, abs(float(v))):
        f = g
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def _check_step(args) -> None:
    if not (args.dt > 0 and math.isfinite(args.dt)):
        raise UsageError("--dt must be a positive number")
    if not (args.t_end >= 0 and math.isfinite(args.t_end)):
        raise UsageError("--t-end must be a nonnegative number")


# commands ---------------------------------------------------------------------


def cmd_analyze(args) -> int:
    _check_step(args)
    doc = _load(args.path)
    report = analyze(doc, coords=_coords(args, doc), seed=seed_from_env(),
                     t_end=args.t_end, dt=args.dt)
    if args.json or args.out:
        _emit(dumps(report), args.out)
    else:
        _emit(_analysis_text(report), None)
    return EXIT_OK


def _analysis_text(report: dict) -> str:
    lines = [f"case: {report['birkhoffian_case']}"]
    g = report["graph_summary"]
    lines.append(f"graph: b={g['b']} n={g['n']} m={g['m']} tellegen={g['tellegen']}")
    coords = report["chart"]["coordinates"]
    lines.append("coordinates: " + (coords if isinstance(coords, str) else ",".join(coords)))
    for i, eq in enumerate(report["equilibria"], 1):
        q = ", ".join(format(v, ".10g") for v in eq["q_e"])
        lines.append(f"equilibrium {i}: q_e = ({q})  {eq['classification']}")
        lines.append(f"  min Hessian eigenvalue {eq['min_eigenvalue']:.6g}")
        for k, v in eq["conditions"].items():
            lines.append(f"  {k}: {v}")
        for note in eq["notes"]:
            lines.append(f"  note: {note}")
    sim = report["simulation"]
    lines.append(f"simulation to t={sim['t_end']:g}: {sim['status']}, "
                 f"energy monitor {'ok' if sim['monotone']['ok'] else 'FAILED'}")
    return "\n".join(lines) + "\n"


def cmd_simulate(args) -> int:
    _check_step(args)
    doc = _load(args.path)
    net = prepare(doc, _coords(args, doc))
    traj, mono = simulate(net, args.t_end, args.dt)
    buf = io.StringIO()
    write_csv(traj, buf)
    _emit(buf.getvalue(), args.out)
    summary = {"status": traj.message, "samples": len(traj), "monotone": mono.to_dict()}
    if args.json:
        sys.stderr.write(dumps(summary))
    else:
        verdict = "ok" if mono.ok else f"violated at t={mono.first_violation_time!r}"
        sys.stderr.write(f"{mono.kind} check: {verdict}; integrator: {traj.message}\n")
    return EXIT_OK if traj.ok else EXIT_INTEGRATOR


def cmd_matrices(args) -> int:
    doc = _load(args.path)
    net = prepare(doc, _coords(args, doc), require_regular=False)
    g, cs = net.graph, net.chart
    names = [br.name for br in doc.branches]
    if args.json:
        _emit(dumps({
            "branches": names,
            "node_columns": list(g.node_columns),
            "B": g.B, "A": g.A, "N": cs.N, "K": [_rational(v) for v in cs.K],
            "c": [_rational(v) for v in cs.c],
            "AtB": exact.int_matmul(g.A.T, g.B),
        }), args.out)
        return EXIT_OK
    parts = [
        "branches: " + " ".join(names),
        "B (columns: nodes " + " ".join(map(str, g.node_columns)) + ")",
        exact.format_matrix(g.B),
        "A",
        exact.format_matrix(g.A),
        "N (coordinates: " + (
            ",".join(f"x{i + 1}" for i in cs.coord_branches)
            if cs.coord_branches is not None else "loop basis") + ")",
        exact.format_matrix(cs.N),
        "K",
        exact.format_matrix([[_rational(v)] for v in cs.K]),
        "c",
        exact.format_matrix([[_rational(v)] for v in cs.c]),
        "A^T B",
        exact.format_matrix(exact.int_matmul(g.A.T, g.B)),
    ]
    _emit("\n".join(parts) + "\n", args.out)
    return EXIT_OK


def cmd_equilibria(args) -> int:
    doc = _load(args.path)
    net = prepare(doc, _coords(args, doc))
    eqs = find_equilibria(net.system, seed=seed_from_env())
    if args.json or args.out:
        _emit(dumps([{"q_e": e.q_e, "residual": e.residual} for e in eqs]), args.out)
    else:
        text = "".join(
            "q_e = (" + ", ".join(format(v, ".17g") for v in e.q_e) + f")  residual {e.residual:.3g}\n"
            for e in eqs
        )
        _emit(text or "no equilibria found\n", None)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="birknet", description="Stability analysis of RLC networks.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("path", help="netlist file")
        sp.add_argument("--out", help="write output to this file instead of stdout")
        sp.add_argument("--coords", help="chart coordinates, e.g. x5,x6 or C2,C3")
        sp.add_argument("--json", action="store_true", help="machine-readable output")

    for name, fn, help_text in (
        ("analyze", cmd_analyze, "full stability report"),
        ("simulate", cmd_simulate, "integrate from the netlist's initial conditions"),
        ("matrices", cmd_matrices, "print B, A, N, K"),
        ("equilibria", cmd_equilibria, "list equilibria"),
    ):
        sp = sub.add_parser(name, help=help_text)
        common(sp)
        if name in ("analyze", "simulate"):
            sp.add_argument("--t-end", type=float, default=DEFAULT_T_END,
                            help=f"simulation horizon in seconds (default {DEFAULT_T_END:g})")
            sp.add_argument("--dt", type=float, default=DEFAULT_DT,
                            help=f"RK4 step in seconds (default {DEFAULT_DT:g})")
        sp.set_defaults(func=fn)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (UsageError, NetlistError, GraphError, ChartError, InitialConditionError,
            DomainError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except DegenerateNetworkError as exc:
        sys.stderr.write(f"degenerate network: {exc}\n")
        rep = exc.report
        sys.stderr.write(f"  determinants: {rep.determinant_values}\n")
        return EXIT_DEGENERATE
    except ArithmeticError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_INTEGRATOR


if __name__ == "__main__":
    sys.exit(main())
