"""Command-line entry point: ``cpapprox <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict

from .bounds import full_report
from .compound import compound_poisson, sum_distribution
from .experiments import (
    DEFAULT_N_GRID,
    DEFAULT_P_GRID,
    FIGURES,
    REGIME_NS,
    figure_config,
    format_value,
    report_row,
    rows_to_csv,
    run_config,
    run_proposition_checks,
    run_regimes,
)
from .pmf import DEFAULT_POLICY, TruncationPolicy
from .selftest import run_selftest
from .specfile import load_spec


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # bad flags are validation errors (exit 1); exit 2 is kept for failed assertions
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _jsonable(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"


def _table_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(c)) for c in columns])
    return buf.getvalue()


def _policy(args) -> TruncationPolicy:
    eps = args.epsilon if args.epsilon is not None else DEFAULT_POLICY.epsilon
    ms = args.max_support if args.max_support is not None else DEFAULT_POLICY.max_support
    return TruncationPolicy(eps, ms)


def _spec_from_args(args):
    return load_spec(args.spec, {"epsilon": args.epsilon, "max_support": args.max_support})


def cmd_pmf(args) -> str:
    spec, policy = _spec_from_args(args)
    p = sum_distribution(spec, policy)
    cpo = compound_poisson(spec.lam, spec.mixture_q, policy, min_support=len(p))
    length = max(len(p), len(cpo))
    sp, cp = p.padded(length), cpo.padded(length)
    if args.format == "json":
        return _dump_json({
            "lam": spec.lam,
            "sum": {"probs": sp[: len(p)].tolist(), "tail_mass": p.tail_mass},
            "cpo": {"probs": cp[: len(cpo)].tolist(), "tail_mass": cpo.tail_mass},
        })
    rows = [{"k": k, "sum": float(sp[k]), "cpo": float(cp[k])} for k in range(length)]
    rows.append({"k": "tail", "sum": p.tail_mass, "cpo": cpo.tail_mass})
    return _table_csv(("k", "sum", "cpo"), rows)


def cmd_bounds(args) -> str:
    spec, policy = _spec_from_args(args)
    report = full_report(spec, policy)
    if args.format == "csv":
        row = report_row({"n": report.n, "lam": report.lam, "q": report.q}, report)
        return rows_to_csv([row], ("n", "lam", "q"))
    out = asdict(report)
    out["violations"] = report.violations()
    return _dump_json(out)


def cmd_figure(args) -> str:
    overrides = {k: getattr(args, k) for k in ("n", "lam", "alpha", "values") if getattr(args, k) is not None}
    config = figure_config(args.name, _policy(args), **overrides)
    rows = run_config(config)
    if args.format == "json":
        return _dump_json({"figure": args.name, "rows": rows})
    return rows_to_csv(rows, config.sweep_columns)


def cmd_regimes(args) -> str:
    param = args.param if args.param is not None else (5.0 if args.regime == "I" else 0.5)
    fits, rows = run_regimes(args.regime, param, args.n_values, _policy(args))
    if args.format == "json":
        return _dump_json({"regime": args.regime, "param": param, "fits": [asdict(f) for f in fits], "rows": rows})
    cols = ("bound_name", "slope", "intercept", "r_squared", "points", "flag")
    return _table_csv(cols, [asdict(f) for f in fits])


def cmd_propcheck(args) -> str:
    report = run_proposition_checks(args.p_grid, args.n_grid)
    rows = []
    for r in report.rows:
        row = asdict(r)
        row["ok"] = r.ok
        rows.append(row)
    print(f"overall: {'pass' if report.overall else 'fail'}", file=sys.stderr)
    if args.format == "json":
        return _dump_json({"overall": report.overall, "rows": rows})
    return _table_csv(tuple(rows[0]), rows)


def cmd_selftest(args) -> str:
    results = run_selftest()
    lines = [f"{'PASS' if ok else 'FAIL'} {name}{': ' + detail if detail else ''}" for name, ok, detail in results]
    failed = [name for name, ok, _ in results if not ok]
    if failed:
        print("\n".join(lines))
        raise AssertionError(f"selftest failed: {', '.join(failed)}")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--epsilon", type=float, help="truncation tail budget (default 1e-12)")
    common.add_argument("--max-support", type=int, help="largest stored support point (default 4096)")
    common.add_argument("--out", help="output file (default: standard output)")
    common.add_argument("--format", choices=("csv", "json"), help="default: json for bounds, csv otherwise")

    parser = _Parser(prog="cpapprox", description="Compound Poisson approximation bounds and experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("pmf", parents=[common], help="sum and compound Poisson pmfs for a spec file")
    p.add_argument("--spec", required=True)
    p.set_defaults(func=cmd_pmf)

    p = sub.add_parser("bounds", parents=[common], help="every bound and exact distance for a spec file")
    p.add_argument("--spec", required=True)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("figure", parents=[common], help="bound-comparison sweep for one figure")
    p.add_argument("--name", required=True, choices=FIGURES)
    p.add_argument("--n", type=int, help="number of summands (2a-2c)")
    p.add_argument("--lam", type=float, help="lambda (2a-2c, 3a) or mu (3b)")
    p.add_argument("--alpha", type=float, help="geometric parameter (2c)")
    p.add_argument("--values", type=_float_list, help="comma-separated sweep values")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("regimes", parents=[common], help="log-log slopes of the bounds in n")
    p.add_argument("--regime", required=True, choices=("I", "II"))
    p.add_argument("--param", type=float, help="lambda for regime I (default 5), mu for II (default 0.5)")
    p.add_argument("--n-values", type=_int_list, default=list(REGIME_NS))
    p.set_defaults(func=cmd_regimes)

    p = sub.add_parser("propcheck", parents=[common], help="compare the entropy bound with classical bounds")
    p.add_argument("--p-grid", type=_float_list, default=list(DEFAULT_P_GRID))
    p.add_argument("--n-grid", type=_int_list, default=list(DEFAULT_N_GRID))
    p.set_defaults(func=cmd_propcheck)

    p = sub.add_parser("selftest", parents=[common], help="run the built-in invariant checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.format is None:
            args.format = "json" if args.command == "bounds" else "csv"
        text = args.func(args)
    except AssertionError as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        # NotApplicable and spec errors are ValueErrors too
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
