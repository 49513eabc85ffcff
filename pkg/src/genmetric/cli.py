"""Command-line front end.

Exit codes: 0 success, 1 a check failed, 2 usage or input error. Reports are
written only after the whole command has succeeded, so a failing run never
leaves partial output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import catalog as cat
from . import checker, hessian_warped as hw, prob_entropy as pe, solver
from .scalars import Scalar, format_scalar, parse_scalar_list, projective_equiv
from .tensor import Axis, Chart, MetricSpec, TensorField, dumps, line_element

FORMATS = ("json", "csv", "table")
SEEDED = ("distance", "check", "warp")


class UsageError(Exception):
    pass


# ------------------------------------------------------------- argument helpers


def _floats(text: str, what: str) -> list[float]:
    try:
        vals = [float(v) for v in str(text).split(",")]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise UsageError(f"{what}: values must be finite")
    return vals


def _param_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _params(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = str(item).partition("=")
        if not sep or not key:
            raise UsageError(f"--param expects name=value, got {item!r}")
        out[key.strip()] = _param_value(value.strip())
    return out


def _load_metric(args) -> MetricSpec:
    if bool(args.metric) == bool(args.tensor):
        raise UsageError("give exactly one of --metric or --tensor")
    if args.tensor:
        try:
            obj = json.loads(Path(args.tensor).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"--tensor: {exc}") from None
        if args.param or args.dim is not None:
            raise UsageError("--param and --dim apply to catalog metrics only")
        try:
            if "tensor" in obj:
                return MetricSpec.from_json(obj)
            t = TensorField.from_json(obj)
        except (KeyError, TypeError) as exc:
            raise UsageError(f"--tensor: malformed tensor file ({exc!r})") from None
        own_aux = t.rank == (0, 2) and t.codomain == "real" and t.symmetry == "fully-symmetric"
        return MetricSpec(t, t if own_aux else None, Path(args.tensor).stem)
    params = _params(args.param)
    if args.dim is not None:
        dims = [n for n, p in cat.entry(args.metric).params.items() if p.kind == "dim"]
        if not dims:
            raise UsageError(f"--dim: {args.metric} has no dimension parameter")
        params.setdefault(dims[0], args.dim)
    return cat.build(args.metric, params)


def _solver_config(args) -> solver.SolverConfig:
    return solver.SolverConfig(segments=args.segments, quadrature=args.quadrature, restarts=args.restarts,
                               max_iters=args.max_iters, step_tol=args.step_tol, value_tol=args.value_tol,
                               seed=args.seed)


# ------------------------------------------------------------- output


def _flatten(obj, prefix: str = "") -> list[tuple[str, object]]:
    if isinstance(obj, dict):
        rows = []
        for k in sorted(obj):
            rows += _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k))
        return rows
    if isinstance(obj, list):
        rows = []
        for i, v in enumerate(obj):
            rows += _flatten(v, f"{prefix}[{i}]")
        return rows
    return [(prefix, obj)]


def _cell(v) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(report, fmt: str, rows: list[list] | None = None, header: list[str] | None = None) -> str:
    """JSON text, CSV, or an aligned table. ``rows``/``header`` override the flattened CSV layout."""
    if fmt == "json":
        return dumps(report) + "\n"
    if rows is None:
        header = ["key", "value"]
        rows = [[k, v] for k, v in _flatten(report)]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])
        return buf.getvalue()
    cells = [[str(h) for h in header]] + [[_cell(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n" for r in cells)


# ------------------------------------------------------------- subcommands


def cmd_catalog(args):
    doc = cat.catalog_document()
    if args.id:
        matches = [e for e in doc["entries"] if e["id"] == args.id]
        if not matches:
            raise UsageError(f"--id: unknown catalog entry {args.id!r}")
        return matches[0], 0, None
    rows = [[e["id"], f"({e['rank'][0]},{e['rank'][1]})", e["codomain"], len(e["axes"]), e["title"]]
            for e in doc["entries"]]
    return doc, 0, (["id", "rank", "codomain", "dim", "title"], rows)


def _scalar_json(s: Scalar):
    return s.c[0] if s.tag == "real" else s.to_json()


def cmd_eval(args):
    m = _load_metric(args)
    point = _floats(args.point, "--point")
    disp = _floats(args.disp, "--disp")
    value = line_element(m, point, disp)
    report = {"metric": m.name, "point": point, "disp": disp, "value": _scalar_json(value),
              "text": format_scalar(value)}
    if args.format == "table":
        return report, 0, (["value"], [[_plain(value)]])
    return report, 0, None


def _plain(s: Scalar) -> str:
    if s.tag == "real":
        return f"{s.c[0]:.15g}"
    return format_scalar(s)


def cmd_distance(args):
    m = _load_metric(args)
    cfg = _solver_config(args)
    p = _floats(args.from_, "--from")
    targets = [_floats(t, "--to") for t in args.to]
    results = [solver.distance(m, p, q, cfg) for q in targets]
    reports = [r.to_json() for r in results]
    rows = [[",".join(repr(v) for v in p), ",".join(repr(v) for v in q), r.value, r.converged]
            for q, r in zip(targets, results)]
    report = reports[0] if len(reports) == 1 else {"results": reports}
    return report, 0, (["from", "to", "value", "converged"], rows)


def cmd_check(args):
    m = _load_metric(args)
    cfg = _solver_config(args)
    rep = checker.check_metric(m, seed=args.seed, samples=args.samples,
                               invariance_samples=args.invariance_samples, cfg=cfg, axioms=not args.no_axioms)
    report = rep.to_json()
    rows = [["symmetry", report["verdicts"]["symmetry"]["status"]],
            ["invariance", report["verdicts"]["invariance"]["status"]],
            ["smoothness", report["verdicts"]["smoothness"]["status"]],
            ["topology", report["verdicts"]["topology"]["status"]],
            ["definiteness", rep.definiteness.label]]
    if rep.distance_axioms is not None:
        rows += [["distance", rep.distance_axioms.kind]]
    code = 1 if rep.failed else 0
    if args.format == "table":
        return report, code, (["condition", "verdict"], rows)
    return report, code, None


def cmd_hessian(args):
    names = [n.strip() for n in args.coords.split(",") if n.strip()]
    if not names:
        raise UsageError("--coords needs at least one name")
    phi = hw.Potential(args.phi, Chart.simple(names), _params(args.param))
    field = hw.hessian_field(phi, args.order)
    report = {"tensor": field.to_json()}
    if args.point is not None:
        res = hw.hessian_metric(phi, args.order, _floats(args.point, "--point"),
                                None if args.fd_step is None else args.fd_step)
        report["numeric"] = {"point": _floats(args.point, "--point"), "values": res.table.values[..., 0].tolist(),
                             "asymmetry": res.asymmetry, "step": res.step.tolist()}
    return report, 0, None


def _block(coords: str, diag: str, role: str) -> TensorField:
    names = [n.strip() for n in coords.split(",") if n.strip()]
    entries = [d.strip() for d in diag.split(";")]
    if len(entries) != len(names):
        raise UsageError(f"need one diagonal entry per coordinate ({len(names)}), separated by ';'")
    chart = Chart(tuple(Axis(n, role) for n in names))
    return TensorField((0, 2), chart, "real", {(i, i): e for i, e in enumerate(entries)}, "fully-symmetric")


def cmd_warp(args):
    if args.verify_flrw is not None:
        ok, dev = hw.verify_flrw_warped(args.verify_flrw, args.c, seed=args.seed)
        return {"a": args.verify_flrw, "c": args.c, "match": ok, "max_deviation": dev}, 0 if ok else 1, None
    if not (args.base_coords and args.base_diag and args.fiber_coords and args.fiber_diag and args.warp):
        raise UsageError("give --base-coords, --base-diag, --fiber-coords, --fiber-diag and --warp, or --verify-flrw")
    spec = hw.WarpSpec(_block(args.base_coords, args.base_diag, "time" if args.base_time else "generic"),
                       _block(args.fiber_coords, args.fiber_diag, "space"), args.warp, _params(args.param))
    m = hw.warped_product(spec, seed=args.seed)
    return {"tensor": m.tensor.to_json()}, 0, None


def cmd_entropy(args):
    if args.probability is not None:
        return {"information": pe.shannon_information(args.probability), "log_base": pe.LOG_BASE}, 0, None
    if not args.density or not args.interval:
        raise UsageError("give --density with at least one --interval, or --probability")
    intervals = []
    for text in args.interval:
        vals = _floats(text, "--interval")
        if len(vals) != 2:
            raise UsageError("--interval expects lo,hi")
        intervals.append(tuple(vals))
    d = pe.DensitySpec(args.density, intervals, args.nodes, args.variable, args.mass_tol)
    return pe.integrate_entropy(d).to_json(), 0, None


def cmd_projective(args):
    a, b = parse_scalar_list(args.a), parse_scalar_list(args.b)
    eq = projective_equiv(a, b, args.tol)
    return {"a": [format_scalar(s) for s in a], "b": [format_scalar(s) for s in b], "equivalent": eq,
            "tol": args.tol}, 0, None


# ------------------------------------------------------------- parser


def _metric_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--metric", help="catalog id (see the catalog subcommand)")
    p.add_argument("--tensor", help="path to a TensorField or MetricSpec JSON file")
    p.add_argument("--param", action="append", help="catalog parameter override name=value (repeatable)")
    p.add_argument("--dim", type=int, help="value of the entry's first dimension parameter")


def _solver_args(p: argparse.ArgumentParser, segments: int = 64, restarts: int = 8) -> None:
    d = solver.SolverConfig()
    p.add_argument("--segments", type=int, default=segments)
    p.add_argument("--quadrature", choices=solver.QUADRATURES, default=d.quadrature)
    p.add_argument("--restarts", type=int, default=restarts)
    p.add_argument("--max-iters", type=int, default=d.max_iters)
    p.add_argument("--step-tol", type=float, default=d.step_tol)
    p.add_argument("--value-tol", type=float, default=d.value_tol)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genmetric", description="Generalized line elements, distances and "
                                     "metrizability checks for higher-rank tensor fields.")
    parser.add_argument("--format", choices=FORMATS, default="json")
    parser.add_argument("--output", help="write the report here instead of standard output")
    parser.add_argument("--config", help="JSON file of option defaults; explicit flags take precedence")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", help="list built-in metric families",
                       description="Built-in metric families: flat, cubic, complex, FLRW-type, perturbed AdS, "
                                   "probabilistic and entropic spacetimes.")
    p.add_argument("--id", help="show one entry")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("eval", help="evaluate a line element",
                       description="Generalized line element: the full contraction of the tensor with one "
                                   "displacement per index, lowering upper indices first.")
    _metric_args(p)
    p.add_argument("--point", required=True)
    p.add_argument("--disp", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("distance", help="approximate the induced distance",
                       description="Induced distance: infimum over curves of the integrated root of the "
                                   "absolute line element, estimated over seeded restarts.")
    _metric_args(p)
    p.add_argument("--from", dest="from_", required=True)
    p.add_argument("--to", action="append", required=True, help="target point (repeat for a sweep)")
    p.add_argument("--seed", type=int)
    _solver_args(p)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("check", help="run the metrizability checks",
                       description="Metrizability conditions of the generalized metrization theorem: index "
                                   "symmetry, definiteness, smoothness, invariance, distance axioms.")
    _metric_args(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int, default=checker.DEFAULT_SAMPLES)
    p.add_argument("--invariance-samples", type=int, default=100)
    p.add_argument("--no-axioms", action="store_true", help="skip the solver-based distance axioms")
    _solver_args(p, segments=16, restarts=2)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("hessian", help="metric from a potential",
                       description="Hessian structure: all order-L partial derivatives of a potential.")
    p.add_argument("--phi", required=True, help="potential expression")
    p.add_argument("--coords", required=True, help="comma-separated coordinate names")
    p.add_argument("--order", type=int, default=2, choices=hw.ORDERS)
    p.add_argument("--point", help="also estimate the derivatives numerically here")
    p.add_argument("--fd-step", type=float)
    p.add_argument("--param", action="append")
    p.set_defaults(func=cmd_hessian)

    p = sub.add_parser("warp", help="warped product metric",
                       description="Warped product: base block plus squared warping function times the "
                                   "fiber block; also checks FLRW against this construction.")
    p.add_argument("--base-coords")
    p.add_argument("--base-diag", help="diagonal entries separated by ';'")
    p.add_argument("--base-time", action="store_true", help="mark the base axes as time axes")
    p.add_argument("--fiber-coords")
    p.add_argument("--fiber-diag", help="diagonal entries separated by ';'")
    p.add_argument("--warp", help="warping function of the base coordinates")
    p.add_argument("--param", action="append")
    p.add_argument("--verify-flrw", metavar="A", help="compare FLRW with scale factor A to the warped product")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_warp)

    p = sub.add_parser("entropy", help="Shannon information and entropy",
                       description="Shannon information -ln p and differential entropy -int P ln P "
                                   "(natural logarithm).")
    p.add_argument("--density", help="density expression")
    p.add_argument("--variable", default="x")
    p.add_argument("--interval", action="append", help="lo,hi (repeatable)")
    p.add_argument("--nodes", type=int, default=10001)
    p.add_argument("--mass-tol", type=float, default=1e-6)
    p.add_argument("--probability", type=float)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("projective", help="compare scalar tuples up to a scalar factor",
                       description="Projective equivalence of scalar tuples under left multiplication.")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_projective)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Install --config values as subcommand defaults, rejecting unknown keys."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        cfg = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"--config: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("--config must hold a JSON object")
    command = next((a for a in rest if not a.startswith("-")), None)
    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    if command not in subs.choices:
        return
    sp = subs.choices[command]
    dests = {a.dest for a in sp._actions} - {"help", "func"}
    unknown = set(cfg) - dests
    if unknown:
        raise UsageError(f"--config: unknown keys {sorted(unknown)}")
    for a in sp._actions:
        if a.dest in cfg:
            a.required = False
    sp.set_defaults(**cfg)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"genmetric: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command in SEEDED and args.seed is None:
            raise UsageError(f"{args.command} samples randomly and needs an explicit --seed")
        report, code, layout = args.func(args)
        header, rows = layout if layout is not None else (None, None)
        if args.format == "json":
            header = rows = None
        text = render(report, args.format, rows, header)
    except UsageError as exc:
        print(f"genmetric: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"genmetric: error: {exc}", file=sys.stderr)
        return 2
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
