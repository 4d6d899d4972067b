"""Single command-line entry point (`lv3`) exposing the toolkit.

Output contract: CSV uses a header row and 17-significant-digit decimals so
round-trip parsing is lossless; JSON lines carry one object per record with
lexicographically sorted keys.  All sampling is driven by the explicit seed
in the run configuration, so identical invocations produce byte-identical
output.  Exit codes: 0 pass, 1 failure, 2 inconclusive present, 64 usage,
74 I/O.
"""

from __future__ import annotations

import argparse
import ast
import json
import math
import sys
from dataclasses import dataclass

from . import analysis, darboux, equilibria, flow
from .params import ParamVector, ZeroParameter, classify, discriminant
from .rng import SplitMix64

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 64
EXIT_IO = 74

SUBCOMMANDS = (
    "classify",
    "equilibria",
    "darboux",
    "integrate",
    "limit-set",
    "verify-a",
    "verify-b",
    "match",
    "period-profile",
    "scan",
    "portrait",
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _triple(text: str) -> tuple:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}")
    return tuple(parts)


def _pair(text: str) -> tuple:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected lo,hi, got {text!r}")
    return tuple(parts)


def _param_vector(text: str) -> ParamVector:
    try:
        return ParamVector.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _positive(text: str) -> float:
    value = float(text)
    if value <= 0.0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


@dataclass
class RunConfig:
    """Resolved configuration of one CLI invocation."""

    command: str
    k: ParamVector | None = None
    p0: tuple = (0.2, 0.2, 0.2)
    t_end: float = 50.0
    tol_rel: float = flow.DEFAULT_TOL_REL
    tol_abs: float = flow.DEFAULT_TOL_ABS
    horizon: float = analysis.DEFAULT_HORIZON
    samples: int = 20
    seed: int = 42
    fmt: str = "csv"
    monitor: tuple = ()
    backward: bool = False
    spectrum: bool = False
    alpha: bool = False
    x0: float | None = None
    base: tuple = (0.25, 0.25, 0.25)
    direction: tuple = (0.0, -1.0, 0.0)
    inner: float = 0.01
    outer: float = 0.22
    n: int = 10
    slice_expr: str | None = None
    t_range: tuple = (0.0, 1.0)
    steps: int = 11
    s_range: tuple | None = None
    s_steps: int = 1
    out: str | None = None


def _build_parser() -> _Parser:
    parser = _Parser(prog="lv3", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="|".join(SUBCOMMANDS))

    def add(name, needs_k=True, **kwargs):
        p = sub.add_parser(name, **kwargs)
        if needs_k:
            p.add_argument("--k", type=_param_vector, required=True,
                           help="parameter vector k1,k2,k3,k4")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--format", dest="fmt", choices=("csv", "json"), default=None)
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--tol-rel", type=_positive, default=flow.DEFAULT_TOL_REL)
        p.add_argument("--tol-abs", type=_positive, default=flow.DEFAULT_TOL_ABS)
        return p

    add("classify")
    p = add("equilibria")
    p.add_argument("--spectrum", action="store_true")
    add("darboux")
    p = add("integrate")
    p.add_argument("--p0", type=_triple, required=True)
    p.add_argument("--t", dest="t_end", type=_positive, required=True)
    p.add_argument("--backward", action="store_true")
    p.add_argument("--monitor", default="", help="comma list of integral names (H,V,Htilde,Vtilde)")
    p = add("limit-set")
    p.add_argument("--p0", type=_triple, required=True)
    p.add_argument("--horizon", type=_positive, default=analysis.DEFAULT_HORIZON)
    p.add_argument("--alpha", action="store_true", help="also probe backward time")
    p = add("verify-a")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--horizon", type=_positive, default=analysis.DEFAULT_HORIZON)
    p = add("verify-b")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--horizon", type=_positive, default=analysis.DEFAULT_HORIZON)
    p = add("match")
    p.add_argument("--x0", type=float, required=True)
    p = add("period-profile")
    p.add_argument("--base", type=_triple, default=(0.25, 0.25, 0.25))
    p.add_argument("--dir", dest="direction", type=_triple, default=(0.0, -1.0, 0.0))
    p.add_argument("--inner", type=_positive, default=0.01)
    p.add_argument("--outer", type=_positive, default=0.22)
    p.add_argument("--n", type=int, default=10)
    p = add("scan", needs_k=False)
    p.add_argument("--slice", dest="slice_expr", required=True,
                   help="four expressions in t (and optionally s), e.g. '2,t,2,t'")
    p.add_argument("--range", dest="t_range", type=_pair, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--range2", dest="s_range", type=_pair, default=None)
    p.add_argument("--steps2", dest="s_steps", type=int, default=1)
    p.add_argument("--p0", type=_triple, default=(0.2, 0.2, 0.2))
    p.add_argument("--horizon", type=_positive, default=analysis.DEFAULT_HORIZON)
    p = add("portrait")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", dest="t_end", type=_positive, default=50.0)
    return parser


def parse_args(argv) -> RunConfig:
    """Parse argv into a RunConfig; usage problems exit with code 64."""
    parser = _build_parser()
    ns = parser.parse_args(argv)
    cfg = RunConfig(command=ns.command)
    for name in vars(ns):
        if hasattr(cfg, name) and getattr(ns, name) is not None:
            setattr(cfg, name, getattr(ns, name))
    if getattr(ns, "fmt", None) is None:
        cfg.fmt = "csv" if ns.command in ("integrate", "portrait") else "json"
    if getattr(ns, "monitor", ""):
        cfg.monitor = tuple(m.strip() for m in ns.monitor.split(",") if m.strip())
    if getattr(ns, "backward", False):
        cfg.t_end = -cfg.t_end
    if ns.command == "scan":
        try:
            _, uses_s = parse_slice(cfg.slice_expr)
        except ValueError as exc:
            parser.error(str(exc))
        if uses_s and cfg.s_range is None:
            parser.error("slice uses the variable s: provide --range2 (and --steps2)")
    return cfg


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _jsonable(value):
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(key): _jsonable(v) for key, v in value.items()}
    if isinstance(value, float) and (math.isnan(value) or math.isinf(value)):
        return repr(value)
    if hasattr(value, "__dataclass_fields__"):
        return {name: _jsonable(getattr(value, name)) for name in value.__dataclass_fields__}
    return value


def emit_jsonl(records, stream):
    for record in records:
        stream.write(json.dumps(_jsonable(record), sort_keys=True))
        stream.write("\n")


def emit_csv(header, rows, stream):
    stream.write(",".join(header))
    stream.write("\n")
    for row in rows:
        stream.write(",".join(_fmt(cell) for cell in row))
        stream.write("\n")


def emit(report, fmt, stream, header=None):
    """Write a report as CSV rows or JSON lines."""
    if fmt == "csv":
        emit_csv(header or [], report, stream)
    else:
        emit_jsonl(report, stream)


# ---------------------------------------------------------------------------
# Subcommand implementations (each returns an exit code)


def _cmd_classify(cfg, stream):
    try:
        regime = classify(cfg.k)
    except ZeroParameter as exc:
        print(f"lv3: {exc}", file=sys.stderr)
        return EXIT_FAIL
    d = discriminant(cfg.k)
    nz = "" if regime.in_nz else "  (outside NZ)"
    stream.write(f"{regime.label()}  discriminant={_fmt(d)}{nz}\n")
    return EXIT_OK


def _cmd_equilibria(cfg, stream):
    k = cfg.k
    records = []
    for segment, open_ends in ((equilibria.edge_py(), False), (equilibria.edge_xz(), False)):
        records.append({
            "set": segment.label,
            "a": list(segment.a),
            "b": list(segment.b),
            "open": segment.open_ends,
        })
    regime = classify(k)
    if regime.in_ps:
        for segment in equilibria.limit_segments(k):
            records.append({
                "set": segment.label,
                "a": list(segment.a),
                "b": list(segment.b),
                "open": False,
                "degenerate": segment.degenerate,
            })
    segment = equilibria.interior_segment_R(k)
    if segment is not None:
        records.append({
            "set": segment.label,
            "a": list(segment.a),
            "b": list(segment.b),
            "open": True,
        })
    if not regime.in_nz:
        records.append({"set": "fully-singular", "labels": equilibria.singular_boundary_sets(k)})
    if cfg.spectrum:
        if segment is not None:
            z_top = k.k4 / (k.k3 + k.k4)
            for i in range(1, 6):
                z = z_top * i / 6.0
                rep = equilibria.interior_spectrum(k, z)
                records.append({
                    "set": "R_interior",
                    "kind": "spectrum",
                    "z": z,
                    "classification": rep.classification,
                    "b": rep.b,
                    "eigenvalues": [[w.real, w.imag] for w in rep.eigenvalues],
                })
        for i in range(1, 6):
            x0 = i / 6.0
            rep = equilibria.edge_spectrum_py(k, x0)
            records.append({
                "set": "R_py_edge",
                "kind": "spectrum",
                "x0": x0,
                "classification": rep.classification,
                "outside_s_py_span": rep.outside_span,
                "eigenvalues": [[w.real, w.imag] for w in rep.eigenvalues],
            })
    emit_jsonl(records, stream)
    return EXIT_OK


def _cmd_darboux(cfg, stream):
    k = cfg.k
    records = []
    for surface in darboux.builtin_surfaces(k):
        check = darboux.verify_invariance(surface, k)
        records.append({
            "record": "surface",
            "name": surface.name,
            "cofactor": {" ".join(map(str, e)): c for e, c in surface.cofactor.coefficients().items()},
            "invariant": check.ok,
            "max_residual": check.max_residual,
        })
    report = darboux.solve_darboux(k)
    records.append({
        "record": "kernel",
        "monomials": [" ".join(map(str, m)) for m in report.monomials],
        "basis": [list(v) for v in report.kernel],
        "subsystem_determinants": list(report.subsystem_determinants),
    })
    for name, status in report.named.items():
        records.append({
            "record": "named-integral",
            "name": name,
            "exponents": list(status.exponents),
            "non_constant": status.non_constant,
            "cofactor_residual": status.cofactor_residual,
            "certified": status.certified,
        })
    emit_jsonl(records, stream)
    return EXIT_OK


def _cmd_integrate(cfg, stream):
    traj = flow.integrate(cfg.k, cfg.p0, cfg.t_end, cfg.tol_rel, cfg.tol_abs,
                          monitor=list(cfg.monitor), keep_dense=False)
    names = list(cfg.monitor)
    if cfg.fmt == "csv":
        header = ["t", "x", "y", "z"] + [f"log{n}" for n in names]
        rows = []
        for i, t in enumerate(traj.t):
            row = [t, *traj.states[i]]
            for name in names:
                row.append(traj.drift[name][i])
            rows.append(row)
        emit_csv(header, rows, stream)
    else:
        records = []
        for i, t in enumerate(traj.t):
            rec = {"t": t, "x": traj.states[i][0], "y": traj.states[i][1], "z": traj.states[i][2]}
            for name in names:
                rec[f"log{name}"] = traj.drift[name][i]
            records.append(rec)
        emit_jsonl(records, stream)
    return EXIT_OK


def _cmd_limit_set(cfg, stream):
    reports = [analysis.omega_limit(cfg.k, cfg.p0, cfg.horizon, cfg.tol_rel, cfg.tol_abs)]
    if cfg.alpha:
        reports.append(analysis.alpha_limit(cfg.k, cfg.p0, cfg.horizon, cfg.tol_rel, cfg.tol_abs))
    emit_jsonl(reports, stream)
    if any(r.kind == "inconclusive" for r in reports):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _verify_exit(report) -> int:
    if report.get("failed", False):
        return EXIT_FAIL
    if report.get("n_inconclusive", 0):
        return EXIT_INCONCLUSIVE
    if report.get("passed", False):
        return EXIT_OK
    return EXIT_FAIL


def _cmd_verify_a(cfg, stream):
    report = analysis.verify_theorem_a(cfg.k, cfg.samples, cfg.seed,
                                       cfg.tol_rel, cfg.tol_abs, cfg.horizon)
    emit_jsonl([report], stream)
    return _verify_exit(report)


def _cmd_verify_b(cfg, stream):
    report = analysis.verify_theorem_b(cfg.k, cfg.samples, cfg.seed,
                                       cfg.tol_rel, cfg.tol_abs, cfg.horizon)
    emit_jsonl([report], stream)
    return _verify_exit(report)


def _cmd_match(cfg, stream):
    report = analysis.heteroclinic_match(cfg.k, cfg.x0)
    emit_jsonl([report], stream)
    return EXIT_OK


def _cmd_period_profile(cfg, stream):
    offsets = [cfg.inner + (cfg.outer - cfg.inner) * i / (cfg.n - 1) for i in range(cfg.n)] \
        if cfg.n > 1 else [cfg.inner]
    points = analysis.make_ray(cfg.base, cfg.direction, offsets)
    report = analysis.period_profile(cfg.k, points, cfg.tol_rel, cfg.tol_abs, cfg.horizon)
    emit_jsonl(report["rows"] + [{
        "summary": True,
        "strictly_increasing": report["strictly_increasing"],
        "n_conclusive": report["n_conclusive"],
    }], stream)
    return EXIT_OK if report["n_conclusive"] == len(report["rows"]) else EXIT_INCONCLUSIVE


_SLICE_OPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a**b,
}


def _eval_expr(node, names):
    if isinstance(node, ast.Expression):
        return _eval_expr(node.body, names)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name):
        if node.id in names:
            return names[node.id]
        raise ValueError(f"unknown slice variable {node.id!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _SLICE_OPS:
        return _SLICE_OPS[type(node.op)](_eval_expr(node.left, names), _eval_expr(node.right, names))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        value = _eval_expr(node.operand, names)
        return -value if isinstance(node.op, ast.USub) else value
    raise ValueError("unsupported slice expression")


_SLICE_NODES = (
    ast.Expression, ast.Constant, ast.Name, ast.BinOp, ast.UnaryOp,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd, ast.Load,
)


def parse_slice(text: str):
    """Compile a four-component slice expression in t (and optionally s).

    Only arithmetic on numbers and the slice variables is accepted.
    """
    parts = text.split(",")
    if len(parts) != 4:
        raise ValueError(f"slice needs four comma-separated expressions, got {text!r}")
    try:
        trees = [ast.parse(p.strip(), mode="eval") for p in parts]
    except SyntaxError as exc:
        raise ValueError(f"bad slice expression: {exc}") from exc
    for tree in trees:
        for node in ast.walk(tree):
            if not isinstance(node, _SLICE_NODES):
                raise ValueError(f"unsupported slice syntax: {ast.dump(node)[:40]}")
            if isinstance(node, ast.Name) and node.id not in ("t", "s"):
                raise ValueError(f"unknown slice variable {node.id!r}")
            if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
                raise ValueError("slice constants must be numbers")
    uses_s = any(
        isinstance(nd, ast.Name) and nd.id == "s" for tree in trees for nd in ast.walk(tree)
    )

    def kfunc(t, s=None):
        names = {"t": t}
        if s is not None:
            names["s"] = s
        return ParamVector(*(_eval_expr(tree, names) for tree in trees))

    return kfunc, uses_s


def _linspace(lo, hi, n):
    if n <= 1:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _cmd_scan(cfg, stream):
    kfunc, uses_s = parse_slice(cfg.slice_expr)
    ts = _linspace(cfg.t_range[0], cfg.t_range[1], cfg.steps)
    if uses_s:
        ss = _linspace(cfg.s_range[0], cfg.s_range[1], cfg.s_steps)
        samples = [({"t": t, "s": s}, kfunc(t, s)) for s in ss for t in ts]
    else:
        samples = [({"t": t}, kfunc(t)) for t in ts]
    rows = analysis.bifurcation_scan(samples, cfg.p0, cfg.horizon, cfg.tol_rel, cfg.tol_abs)
    emit_jsonl(rows, stream)
    return EXIT_OK


def _cmd_portrait(cfg, stream):
    rng = SplitMix64(cfg.seed)
    starts = analysis.sample_interior(cfg.k, cfg.n, rng)
    header = ["traj", "t", "x", "y", "z"]
    rows = []
    for idx, p0 in enumerate(starts):
        traj = flow.integrate(cfg.k, p0, cfg.t_end, cfg.tol_rel, cfg.tol_abs, keep_dense=False)
        for t, state in zip(traj.t, traj.states):
            rows.append([idx, t, *state])
    emit_csv(header, rows, stream)
    return EXIT_OK


_HANDLERS = {
    "classify": _cmd_classify,
    "equilibria": _cmd_equilibria,
    "darboux": _cmd_darboux,
    "integrate": _cmd_integrate,
    "limit-set": _cmd_limit_set,
    "verify-a": _cmd_verify_a,
    "verify-b": _cmd_verify_b,
    "match": _cmd_match,
    "period-profile": _cmd_period_profile,
    "scan": _cmd_scan,
    "portrait": _cmd_portrait,
}


def main(argv=None) -> int:
    cfg = parse_args(sys.argv[1:] if argv is None else argv)
    handler = _HANDLERS[cfg.command]
    stream = sys.stdout
    opened = None
    try:
        if cfg.out:
            opened = open(cfg.out, "w", encoding="utf-8")
            stream = opened
        code = handler(cfg, stream)
        stream.flush()
        return code
    except OSError as exc:
        print(f"lv3: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ZeroParameter, ArithmeticError) as exc:
        print(f"lv3: {exc}", file=sys.stderr)
        return EXIT_FAIL
    finally:
        if opened is not None:
            opened.close()


if __name__ == "__main__":
    sys.exit(main())
