"""Command line front end.

Subcommands:

  mintrh    closed-form threshold for one tracker configuration
  sweep     thresholds across one swept variable
  simulate  seeded Monte Carlo failure estimate for one configuration
  tables    the bundled result tables as CSV files

Options can come from a flat key = value config file (--config); explicit
command line flags always win over config values, and unknown config keys
are rejected. All CSV output uses '.' as the decimal separator, 6
significant digits for floats, and deterministic row order, so repeated
runs and parallel runs (--jobs) are byte-identical.

Exit codes: 0 success, 1 usage or config error (bad flags, malformed
config files, invalid or unsatisfiable parameter combinations), 2
internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import multiprocessing
import os
import sys

from fractions import Fraction

from . import analytics
from .attacks import PATTERN_KINDS, PatternSpec
from .dram import DerivedParams, DramTimings, derive_params
from .errors import ContractViolationError, UnreachableTargetError
from .montecarlo import (
    _VECTOR_BLOCK,
    TrialConfig,
    failed_row_counts,
    resolve_method,
    summarize,
)
from .trackers import TRACKER_KINDS, TrackerSpec

MINTRH_FIELDS = ("tracker", "pattern", "model", "target_bank_years",
                 "min_trh", "min_trh_d", "p_refw", "mttf_bank_years")


class ConfigError(Exception):
    pass


def _parse_bool(text):
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _parse_values(text):
    """Comma list (1,2,3) or range lo:hi[:step], hi inclusive."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                lo, hi, step = parts[0], parts[1], 1
            elif len(parts) == 3:
                lo, hi, step = parts
            else:
                raise ValueError
            if step < 1 or hi < lo:
                raise ValueError
            return list(range(lo, hi + 1, step))
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected lo:hi[:step] or a comma list of integers, got {text!r}"
        ) from None


def _parse_tracker_list(text):
    """Comma list of tracker kinds; the empty string means an empty list."""
    kinds = [part.strip() for part in text.split(",") if part.strip()]
    for kind in kinds:
        if kind not in TRACKER_KINDS:
            raise argparse.ArgumentTypeError(
                f"unknown tracker {kind!r}, expected one of {', '.join(TRACKER_KINDS)}")
    return kinds


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _write_csv(stream, header, rows):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(cell) for cell in row])


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _emit(path, header, rows):
    stream, close = _open_out(path)
    try:
        _write_csv(stream, header, rows)
    finally:
        if close:
            stream.close()


def load_config(path):
    """Flat key = value file; blank lines and # comments ignored."""
    values = {}
    with open(path) as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw.strip()!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if not key or not value:
                raise ConfigError(f"{path}:{lineno}: empty key or value")
            if key in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            values[key] = value
    return values


def _typed_config(subparser, raw):
    """Convert config strings with each option's own parser; reject unknowns."""
    actions = {}
    for action in subparser._actions:
        if action.dest not in ("help", "config"):
            actions[action.dest.replace("_", "-")] = action
            actions[action.dest] = action
    typed = {}
    for key, text in raw.items():
        action = actions.get(key)
        if action is None:
            raise ConfigError(f"unknown config key {key!r}")
        convert = action.type if action.type is not None else str
        try:
            value = convert(text)
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from None
        if action.choices is not None and value not in action.choices:
            raise ConfigError(
                f"config key {key!r}: {value!r} not in {sorted(action.choices)}")
        typed[action.dest] = value
    return typed


def _add_common(sub):
    sub.add_argument("--config", help="flat key = value config file")
    sub.add_argument("--out", help="output CSV path (default stdout)")
    sub.add_argument("--target-bank-years", type=float,
                     default=analytics.DEFAULT_TARGET_BANK_YEARS,
                     help="per-bank MTTF target in years")
    sub.add_argument("--rounding", choices=("floor", "ceil", "nearest"),
                     default="nearest", help="slot budget rounding")


def _add_tracker(sub):
    sub.add_argument("--tracker", choices=TRACKER_KINDS, default="mint")
    sub.add_argument("--transitive", type=_parse_bool, default=True,
                     help="keep the distance-escalating zero slot (mint)")
    sub.add_argument("--entries", type=int, help="table size (misra_gries)")
    sub.add_argument("--rfm-th", type=int,
                     help="activations per triggered mitigation")
    sub.add_argument("--dmq", type=_parse_bool, default=False,
                     help="delayed-mitigation queue wrapper")


def _add_pattern(sub):
    sub.add_argument("--pattern", choices=PATTERN_KINDS, default=None)
    sub.add_argument("--k", type=int, default=1, help="distinct attack rows")
    sub.add_argument("--c", type=int, default=1, help="copies per row per interval")
    sub.add_argument("--mp", type=int, help="morphing point (ada)")
    sub.add_argument("--sided", choices=("single", "double"), default="single")


def _tracker_spec(ns):
    return TrackerSpec(kind=ns.tracker, transitive=ns.transitive, entries=ns.entries,
                       rfm_th=ns.rfm_th, dmq=ns.dmq)


def _pattern_spec(ns, default="p2"):
    kind = ns.pattern if ns.pattern is not None else default
    return PatternSpec(kind=kind, k=ns.k, c=ns.c, mp=ns.mp, sided=ns.sided)


def _params(ns):
    return derive_params(DramTimings(), rounding=ns.rounding)


def _result_row(res):
    return (res.tracker, res.pattern, res.model, res.target_bank_years,
            res.min_trh, res.min_trh_d, res.p_refw, res.mttf_bank_years)


def cmd_mintrh(ns):
    params = _params(ns)
    if ns.trackers is not None:
        if ns.rfm_rate is not None or ns.mp is not None:
            raise ValueError("--trackers cannot be combined with --rfm-rate or --mp")
        rows = []
        for kind in ns.trackers:
            spec = TrackerSpec(kind=kind, transitive=ns.transitive,
                               entries=ns.entries if kind == "misra_gries" else None,
                               rfm_th=ns.rfm_th, dmq=ns.dmq)
            if ns.pattern is not None:
                res = analytics.min_trh(spec, _pattern_spec(ns), params,
                                        ns.target_bank_years)
            else:
                res = analytics.tracker_min_trh(spec, params, ns.target_bank_years)
            if ns.dmq_adjust != "none":
                res = analytics.dmq_adjust(res, ns.dmq_adjust, max_act=params.max_act)
            rows.append(_result_row(res))
        _emit(ns.out, MINTRH_FIELDS, rows)
        return 0
    if ns.rfm_rate is not None:
        res = analytics.rfm_min_trh(ns.rfm_rate, params, ns.target_bank_years)
    elif ns.mp is not None and (ns.pattern in (None, "ada")):
        res = analytics.ada_min_trh(ns.mp, params, ns.target_bank_years,
                                    sided=ns.sided, dmq=ns.dmq)
    elif ns.pattern is not None:
        res = analytics.min_trh(_tracker_spec(ns), _pattern_spec(ns), params,
                                ns.target_bank_years)
    else:
        res = analytics.tracker_min_trh(_tracker_spec(ns), params, ns.target_bank_years)
    if ns.dmq_adjust != "none":
        res = analytics.dmq_adjust(res, ns.dmq_adjust, max_act=params.max_act)
    _emit(ns.out, MINTRH_FIELDS, [_result_row(res)])
    return 0


def _sweep_worker(task):
    variable, value, tracker, pattern, params, target = task
    [(_, res)] = analytics.pattern_sweep(variable, [value], tracker, pattern,
                                         params, target)
    return (value,) + _result_row(res)


def cmd_sweep(ns):
    params = _params(ns)
    tracker = _tracker_spec(ns)
    pattern = _pattern_spec(ns)
    tasks = [(ns.variable, value, tracker, pattern, params, ns.target_bank_years)
             for value in sorted(set(ns.values))]
    if ns.jobs > 1:
        with multiprocessing.Pool(ns.jobs) as pool:
            rows = pool.map(_sweep_worker, tasks)
    else:
        rows = [_sweep_worker(task) for task in tasks]
    _emit(ns.out, (ns.variable,) + MINTRH_FIELDS, rows)
    return 0


def _mc_worker(task):
    config, seed, start, stop, method = task
    return failed_row_counts(config, seed, start, stop, method)


def cmd_simulate(ns):
    import numpy as np

    config = TrialConfig(
        tracker=_tracker_spec(ns),
        pattern=_pattern_spec(ns, default="p1"),
        trh=ns.trh,
        max_act=ns.max_act,
        n_refi=ns.n_refi,
        schedule=ns.schedule,
        auto_refresh=ns.auto_refresh,
        watch=ns.watch,
    )
    method = resolve_method(config, ns.method)
    if ns.jobs > 1:
        # Chunks at block boundaries keep the result byte-identical to a
        # serial run: trial i depends only on (config, seed, i).
        chunk = _VECTOR_BLOCK
        if method == "object":
            chunk = max(1, -(-ns.trials // (4 * ns.jobs)))
        tasks = []
        start = 0
        while start < ns.trials:
            stop = min(start + chunk, ns.trials)
            tasks.append((config, ns.seed, start, stop, method))
            start = stop
        with multiprocessing.Pool(ns.jobs) as pool:
            parts = pool.map(_mc_worker, tasks)
        counts = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int32)
    else:
        counts = failed_row_counts(config, ns.seed, 0, ns.trials, method)
    est = summarize(counts, method)
    analytic = None
    try:
        scaled = DerivedParams(max_act_real=Fraction(config.max_act),
                               max_act=config.max_act,
                               refi_per_window=config.n_refi)
        analytic = analytics.p_refw(config.tracker, config.pattern, config.trh,
                                    scaled,
                                    auto_refresh=config.auto_refresh == "uniform")
    except ValueError:
        pass
    header = ("tracker", "pattern", "trh", "max_act", "n_refi", "schedule",
              "auto_refresh", "watch", "trials", "seed", "method", "p_fail",
              "p_fail_stderr", "mean_failed_rows", "rows_stderr", "analytic_p")
    row = (config.tracker.label(), config.pattern.label(), config.trh,
           config.max_act, config.n_refi, config.schedule, config.auto_refresh,
           config.watch, est.trials, ns.seed, est.method, est.p_fail,
           est.p_fail_stderr, est.mean_failed_rows, est.rows_stderr, analytic)
    _emit(ns.out, header, [row])
    return 0


def cmd_tables(ns):
    params = _params(ns)
    target = ns.target_bank_years
    os.makedirs(ns.outdir, exist_ok=True)
    wanted = ("comparison", "postponement", "rfm", "target_ttf",
              "maxact_sweep", "ada_sweep") if ns.which == "all" else (ns.which,)

    def path(name):
        return os.path.join(ns.outdir, f"{name}.csv")

    if "comparison" in wanted:
        rows = [_result_row(r) for r in analytics.comparison_table(params, target)]
        _emit(path("comparison"), MINTRH_FIELDS, rows)
    if "postponement" in wanted:
        rows = analytics.postponement_table(params, target)
        _emit(path("postponement"),
              ("tracker", "min_trh_d_no_queue", "min_trh_d_queued",
               "min_trh_d_adaptive"), rows)
    if "rfm" in wanted:
        rows = [_result_row(analytics.rfm_min_trh(rate, params, target))
                for rate in analytics.RFM_RATE_LABELS]
        _emit(path("rfm"), MINTRH_FIELDS, rows)
    if "target_ttf" in wanted:
        rows = analytics.target_ttf_table(params)
        _emit(path("target_ttf"),
              ("target_bank_years", "system_mttf_years", "min_trh_d",
               "rfm32_min_trh_d", "rfm16_min_trh_d"), rows)
    if "maxact_sweep" in wanted:
        rows = analytics.maxact_ratio_sweep(target_bank_years=target)
        _emit(path("maxact_sweep"),
              ("max_act", "slot_min_trh_d", "sampler_min_trh_d", "ratio"), rows)
    if "ada_sweep" in wanted:
        rows = []
        for mp in range(ns.mp_lo, ns.mp_hi + 1, ns.mp_step):
            res = analytics.ada_min_trh(mp, params, target, sided=ns.sided, dmq=True)
            rows.append((mp, res.min_trh, res.min_trh_d, res.p_refw))
        _emit(path("ada_sweep"), ("mp", "min_trh", "min_trh_d", "p_refw"), rows)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dramtrack",
        description="in-DRAM activation tracker thresholds and simulations",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    registry = {}

    mintrh = subs.add_parser("mintrh", help="closed-form threshold")
    _add_common(mintrh)
    _add_tracker(mintrh)
    _add_pattern(mintrh)
    mintrh.add_argument("--trackers", type=_parse_tracker_list,
                        help="comma list of tracker kinds, one output row each"
                             " (empty list emits the header only)")
    mintrh.add_argument("--rfm-rate", choices=analytics.RFM_RATE_LABELS,
                        help="reduced-rate / triggered mitigation variant")
    mintrh.add_argument("--dmq-adjust", choices=("none", "generic", "drip"),
                        default="none", help="postponement allowance to add")
    mintrh.set_defaults(func=cmd_mintrh)
    registry["mintrh"] = mintrh

    sweep = subs.add_parser("sweep", help="threshold sweep over one variable")
    _add_common(sweep)
    _add_tracker(sweep)
    _add_pattern(sweep)
    sweep.add_argument("--variable", required=True,
                       choices=("k", "c", "max_act", "target_mttf", "mp"))
    sweep.add_argument("--values", type=_parse_values, required=True,
                       help="comma list or lo:hi[:step]")
    sweep.add_argument("--jobs", type=int, default=1)
    sweep.set_defaults(func=cmd_sweep)
    registry["sweep"] = sweep

    simulate = subs.add_parser("simulate", help="Monte Carlo failure estimate")
    _add_common(simulate)
    _add_tracker(simulate)
    _add_pattern(simulate)
    simulate.add_argument("--trh", type=int, required=True)
    simulate.add_argument("--max-act", type=int, default=73)
    simulate.add_argument("--n-refi", type=int, default=8192)
    simulate.add_argument("--schedule", choices=("timely", "max_postponed"),
                          default="timely")
    simulate.add_argument("--auto-refresh", choices=("off", "uniform"), default="off")
    simulate.add_argument("--watch", choices=("victims", "all"), default="victims")
    simulate.add_argument("--trials", type=int, default=10000)
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--method", choices=("auto", "object", "vector"),
                          default="auto")
    simulate.add_argument("--jobs", type=int, default=1)
    simulate.set_defaults(func=cmd_simulate)
    registry["simulate"] = simulate

    tables = subs.add_parser("tables", help="bundled result tables")
    _add_common(tables)
    tables.add_argument("--which", default="all",
                        choices=("all", "comparison", "postponement", "rfm",
                                 "target_ttf", "maxact_sweep", "ada_sweep"))
    tables.add_argument("--outdir", default=".")
    tables.add_argument("--sided", choices=("single", "double"), default="double")
    tables.add_argument("--mp-lo", type=int, default=100)
    tables.add_argument("--mp-hi", type=int, default=7800)
    tables.add_argument("--mp-step", type=int, default=100)
    tables.set_defaults(func=cmd_tables)
    registry["tables"] = tables

    return parser, registry


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, registry = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return 0 if exc.code in (0, None) else 1
    if getattr(ns, "config", None):
        sub = registry[ns.command]
        try:
            sub.set_defaults(**_typed_config(sub, load_config(ns.config)))
        except (ConfigError, OSError) as exc:
            print(f"dramtrack: config error: {exc}", file=sys.stderr)
            return 1
        ns = parser.parse_args(argv)  # explicit flags still win
    try:
        return ns.func(ns)
    except (ValueError, UnreachableTargetError) as exc:
        print(f"dramtrack: {exc}", file=sys.stderr)
        return 1
    except (ContractViolationError, AssertionError) as exc:
        print(f"dramtrack: internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
