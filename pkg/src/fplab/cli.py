"""Command-line front end: ``fplab <subcommand> [options]``.

Exit codes: 0 success, 2 usage or validation error, 3 numeric failure,
4 step cap exceeded (only with ``--strict``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from fplab import __version__
from fplab.estimators import PLAN_D_LIMIT, Kind, NoFiniteD, choose_threshold, estimator_coefficients
from fplab.exact import METHODS, expect_win_rate, expected_hitting_time, moment_report
from fplab.experiments import figure1_rows, figure2_summary, pi45_summary
from fplab.walk import FAIR_COIN_STEP_CAP, BiasParams, CapExceeded, sample_batch

log = logging.getLogger("fplab")

EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_CAP = 4

FIGURE1_COLUMNS = ["d", "ln_d_var_hat", "ln_d_var_tilde"]
FIGURE2_COLUMNS = ["estimator", "p", "d", "m", "mean", "sd", "band_lo", "band_hi", "median_n", "max_n", "capped"]


class UsageError(ValueError):
    pass


def _default_seed() -> int:
    raw = os.environ.get("FPLAB_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"FPLAB_SEED must be an integer, got {raw!r}") from None


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _metadata(args: argparse.Namespace) -> dict:
    config = {
        k: v
        for k, v in sorted(vars(args).items())
        if k not in ("func", "out", "plot", "no_plot", "verbose") and v is not None
    }
    return {"tool": "fplab", "version": __version__, "command": args.command, "config": config, "master_seed": args.seed}


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, allow_nan=True) + "\n"


def _csv_text(meta: dict, columns: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(f"# {meta['tool']} {meta['version']} {meta['command']}\n")
    buf.write(f"# config: {json.dumps(meta['config'], sort_keys=True)}\n")
    buf.write(f"# master_seed: {meta['master_seed']}\n")
    for key, value in meta.items():
        if key not in ("tool", "version", "command", "config", "master_seed"):
            buf.write(f"# {key}: {json.dumps(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _write_table(args, meta: dict, columns: list[str], rows: list[list]) -> None:
    if args.format == "csv":
        _emit(_csv_text(meta, columns, rows), args.out)
    else:
        records = [dict(zip(columns, row)) for row in rows]
        _emit(_json_text({"metadata": meta, "rows": records}), args.out)


def _plot_path(args) -> Path | None:
    if getattr(args, "no_plot", False):
        return None
    if getattr(args, "plot", None):
        return Path(args.plot)
    if args.out:
        return Path(args.out).with_suffix(".png")
    return None


def _kind(args) -> Kind:
    if args.kind == "pi":
        return Kind.pi(args.k if args.k is not None else 6)
    return Kind.ln2()


def _params(text: str) -> BiasParams:
    try:
        return BiasParams(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


# -- subcommands ----------------------------------------------------------


def cmd_exact(args) -> int:
    params = _params(args.p)
    report = moment_report(params, args.d, method=args.method)
    record = {**report.as_dict(), "expected_hitting_time": _finite_or_none(expected_hitting_time(params, args.d))}
    if args.format == "csv":
        _write_table(args, _metadata(args), list(record), [list(record.values())])
    else:
        _emit(_json_text({"metadata": _metadata(args), **record}), args.out)
    return 0


def _finite_or_none(x: float):
    return None if math.isinf(x) else x


def _cap_mode(args):
    return "raise" if args.strict else "flag"


def cmd_simulate(args) -> int:
    params = _params(args.p)
    cap = args.step_cap if args.step_cap is not None else (FAIR_COIN_STEP_CAP if params.is_fair else None)
    batch = sample_batch(params, args.d, args.m, args.seed, workers=args.workers, step_cap=cap, on_cap=_cap_mode(args))
    meta = _metadata(args)
    if args.format == "csv":
        rows = [[i, int(batch.n_steps[i]), int(batch.right_steps[i]), bool(batch.capped[i])] for i in range(len(batch))]
        _write_table(args, meta, ["index", "n_steps", "right_steps", "capped"], rows)
        return 0
    ok = ~batch.capped
    n = batch.n_steps[ok].astype(float)
    w = batch.win_rates()[ok]
    payload = {
        "metadata": meta,
        "p": str(params.exact),
        "d": args.d,
        "m": args.m,
        "capped": int(batch.capped.sum()),
        "n_mean": float(n.mean()),
        "n_se": float(n.std(ddof=1) / math.sqrt(n.size)) if n.size > 1 else None,
        "n_median": float(np.median(n)),
        "n_min": int(n.min()),
        "n_max": int(n.max()),
        "win_rate_mean": float(w.mean()),
        "win_rate_se": float(w.std(ddof=1) / math.sqrt(w.size)) if w.size > 1 else None,
        "exact_expected_hitting_time": _finite_or_none(expected_hitting_time(params, args.d)),
        "exact_mean_win_rate": expect_win_rate(params, args.d) if not params.is_certain else 1.0,
    }
    _emit(_json_text(payload), args.out)
    return 0


def cmd_estimate(args) -> int:
    spec = estimator_coefficients(_kind(args), args.d)
    cap = args.step_cap if args.step_cap is not None else None
    batch = sample_batch(spec.p_implied, args.d, args.m, args.seed, workers=args.workers, step_cap=cap,
                         on_cap=_cap_mode(args))
    ok = ~batch.capped
    est = spec.apply(batch.win_rates()[ok])
    meta = _metadata(args)
    if args.format == "csv":
        all_est = spec.apply(batch.win_rates())
        rows = [[i, int(batch.n_steps[i]), all_est[i], bool(batch.capped[i])] for i in range(len(batch))]
        _write_table(args, meta, ["index", "n_steps", "estimate", "capped"], rows)
        return 0
    se = float(est.std(ddof=1) / math.sqrt(est.size)) if est.size > 1 else None
    payload = {
        "metadata": meta,
        "estimator": spec.to_json(),
        "m": args.m,
        "capped": int(batch.capped.sum()),
        "mean": float(est.mean()),
        "sd": float(est.std(ddof=1)) if est.size > 1 else None,
        "se": se,
        "target": spec.target,
        "error": float(est.mean()) - spec.target,
        "n_mean": float(batch.n_steps[ok].mean()),
    }
    _emit(_json_text(payload), args.out)
    return 0


def cmd_plan(args) -> int:
    plan = choose_threshold(_kind(args), args.eps, args.delta, d_limit=args.d_limit)
    _emit(_json_text({"metadata": _metadata(args), **plan.to_json()}), args.out)
    return 0


def cmd_figure1(args) -> int:
    rows = figure1_rows(args.d_max)
    meta = _metadata(args)
    failed = [r.d for r in rows if r.failed]
    if failed:
        meta["failed_rows"] = failed
    _write_table(args, meta, FIGURE1_COLUMNS, [[r.d, r.ln_d_var_hat, r.ln_d_var_tilde] for r in rows])
    plot = _plot_path(args)
    if plot is not None:
        from fplab.plotting import plot_figure1

        plot_figure1(rows, plot)
    return 0


def cmd_figure2(args) -> int:
    d_list = _int_list(args.d_list)
    summary = figure2_summary(d_list, args.m, args.seed, workers=args.workers, step_cap=args.step_cap)
    capped = sum(r.capped for r in summary.rows)
    if args.strict and capped:
        raise CapExceeded(args.step_cap, -1)
    meta = _metadata(args)
    rows = [[getattr(r, c) for c in FIGURE2_COLUMNS] for r in summary.rows]
    _write_table(args, meta, FIGURE2_COLUMNS, rows)
    plot = _plot_path(args)
    if plot is not None:
        from fplab.plotting import plot_figure2

        plot_figure2(summary.rows, plot)
    return 0


def cmd_pi45(args) -> int:
    summary = pi45_summary(args.replications, args.seed, workers=args.workers, d=args.d)
    summary["published_observation"] = {"max_abs_error_below": 1e-12, "n_min": 47, "n_mean": 89.9, "n_max": 181}
    _emit(_json_text({"metadata": _metadata(args), **summary}), args.out)
    return 0


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of integers, got {text!r}") from None


# -- parser ---------------------------------------------------------------


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _count(text: str) -> int:
    # Accepts 1e5-style counts.
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if value != int(value) or value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text!r}")
    return int(value)


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (default: $FPLAB_SEED or 0)")
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--workers", type=_positive_int, default=1)
    common.add_argument("--strict", action="store_true", help="treat step-cap overruns as fatal (exit 4)")
    common.add_argument("-v", "--verbose", action="store_true")

    def fmt(sub, default):
        sub.add_argument("--format", choices=("csv", "json"), default=default)

    def kind_args(sub):
        sub.add_argument("--kind", choices=("pi", "ln2"), required=True)
        sub.add_argument("--k", type=int, default=None, help="pi estimators: r = tan(pi/k)^2 (default 6)")

    parser = argparse.ArgumentParser(prog="fplab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fplab {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("exact", parents=[common], help="exact moments of the win rate")
    sub.add_argument("--p", required=True, help="probability of an up-step, e.g. 0.75 or 3/4")
    sub.add_argument("--d", type=_positive_int, required=True)
    sub.add_argument("--method", choices=METHODS, default="quadrature")
    fmt(sub, "json")
    sub.set_defaults(func=cmd_exact)

    sub = subs.add_parser("simulate", parents=[common], help="sample first-passage times")
    sub.add_argument("--p", required=True)
    sub.add_argument("--d", type=_positive_int, required=True)
    sub.add_argument("--m", type=_count, default=10_000, help="replications")
    sub.add_argument("--step-cap", type=_count, default=None)
    fmt(sub, "json")
    sub.set_defaults(func=cmd_simulate)

    sub = subs.add_parser("estimate", parents=[common], help="Monte Carlo run of a pi or ln 2 estimator")
    kind_args(sub)
    sub.add_argument("--d", type=_positive_int, required=True)
    sub.add_argument("--m", type=_count, default=10_000)
    sub.add_argument("--step-cap", type=_count, default=None)
    fmt(sub, "json")
    sub.set_defaults(func=cmd_estimate)

    sub = subs.add_parser("plan", parents=[common], help="Chebyshev choice of the threshold d")
    kind_args(sub)
    sub.add_argument("--eps", type=_positive_float, required=True)
    sub.add_argument("--delta", type=_positive_float, required=True)
    sub.add_argument("--d-limit", type=_positive_int, default=PLAN_D_LIMIT, help="largest d to scan")
    fmt(sub, "json")
    sub.set_defaults(func=cmd_plan)

    sub = subs.add_parser("figure1", parents=[common], help="ln(d Var) curves of both pi estimators")
    sub.add_argument("--d-max", type=_positive_int, default=101)
    sub.add_argument("--plot", default=None, help="image path (default: --out with .png)")
    sub.add_argument("--no-plot", action="store_true")
    fmt(sub, "csv")
    sub.set_defaults(func=cmd_figure1)

    sub = subs.add_parser("figure2", parents=[common], help="Monte Carlo bands and hitting-time medians")
    sub.add_argument("--d-list", default="1,3,5,7,9")
    sub.add_argument("--m", type=_count, default=100)
    sub.add_argument("--step-cap", type=_count, default=FAIR_COIN_STEP_CAP)
    sub.add_argument("--plot", default=None)
    sub.add_argument("--no-plot", action="store_true")
    fmt(sub, "csv")
    sub.set_defaults(func=cmd_figure2)

    sub = subs.add_parser("pi45", parents=[common], help="repeat the p = 3/4 pi estimator at d = 45")
    sub.add_argument("--replications", type=_count, default=10_000)
    sub.add_argument("--d", type=_positive_int, default=45)
    fmt(sub, "json")
    sub.set_defaults(func=cmd_pi45)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    start = time.perf_counter()
    try:
        if args.seed is None:
            args.seed = _default_seed()
        code = args.func(args)
    except CapExceeded as exc:
        print(f"fplab: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (NoFiniteD, ArithmeticError) as exc:
        print(f"fplab: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"fplab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    log.info("%s finished in %.2fs", args.command, time.perf_counter() - start)
    return code


if __name__ == "__main__":
    sys.exit(main())
