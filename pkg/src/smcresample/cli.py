"""Command-line entry point: ``smcresample <command> [flags]``.

Every command prints its resolved configuration as one ``config:`` JSON line
before doing any work. Failures print a single ``error: <Type>: <message>``
line on stderr and exit 1; bad flags exit 2.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bench
from .dataio import (
    ensure_parent,
    load_prices_csv,
    log_returns,
    write_diagnostics_csv,
    write_table,
)
from .engine import FilterConfig, run_filter
from .errors import SMCError
from .models import LgssParams, SvParams, kalman_filter, lgss_model_spec, sv_model_spec
from .resampling import SCHEMES

COMMANDS = ("run-lgss", "run-sv", "bench-variance", "bench-rmse", "bench-timing", "check-median")


def _int_list(text: str):
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("particle counts must be positive")
    return values


def _scheme_list(text: str):
    names = tuple(v.strip() for v in text.split(",") if v.strip())
    bad = [n for n in names if n not in SCHEMES]
    if bad or not names:
        raise argparse.ArgumentTypeError(
            f"unknown resampler(s) {', '.join(bad) or text!r}; choose from {', '.join(SCHEMES)}"
        )
    return names


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _fraction(text: str) -> float:
    value = float(text)
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError("must lie in (0, 1]")
    return value


def _add_common(p, *, out_default):
    p.add_argument("--seed", type=_seed, default=0, help="base seed")
    p.add_argument("--out", default=out_default, help="output CSV path")
    p.add_argument("--config", default=None, help="key=value file supplying flag defaults")


def _add_filter(p, particles):
    p.add_argument("--particles", type=int, default=particles, help="number of particles")
    p.add_argument("--steps", type=int, default=100, help="time steps of simulated data")
    p.add_argument("--ess-threshold", type=_fraction, default=0.5,
                   help="resample when ESS < fraction * particles")
    p.add_argument("--resample-every-step", action="store_true", help="ignore the ESS trigger")


def _add_lgss(p):
    d = LgssParams()
    p.add_argument("--phi", type=float, default=d.phi, help="LGSS state persistence")
    p.add_argument("--sigma-e", type=float, default=d.sigma_e, help="LGSS observation noise sd")


def _add_sv(p):
    d = SvParams()
    p.add_argument("--mu", type=float, default=d.mu, help="SV mean log-volatility")
    p.add_argument("--rho", type=float, default=d.rho, help="SV persistence")
    p.add_argument("--tau", type=float, default=d.tau, help="SV instantaneous volatility")


def build_parser():
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="smcresample", description="Particle filtering with pluggable resamplers."
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    subs = {}

    p = sub.add_parser("run-lgss", help="filter simulated linear Gaussian data", formatter_class=fmt)
    _add_common(p, out_default="run-lgss.csv")
    _add_filter(p, particles=20)
    p.add_argument("--resampler", choices=SCHEMES, default="rdd")
    _add_lgss(p)
    p.add_argument("--sigma-v", type=float, default=LgssParams().sigma_v, help="state noise sd")
    subs["run-lgss"] = p

    p = sub.add_parser("run-sv", help="filter log-returns with the SV model", formatter_class=fmt)
    _add_common(p, out_default="run-sv.csv")
    _add_filter(p, particles=25)
    p.add_argument("--resampler", choices=SCHEMES, default="rdd")
    p.add_argument("--prices", default=None,
                   help="date,close CSV; simulated returns are used when omitted")
    _add_sv(p)
    p.add_argument("--sigma-v", type=float, default=SvParams().sigma_v, help="state noise sd")
    subs["run-sv"] = p

    p = sub.add_parser("bench-variance", help="paired weight-variance comparison", formatter_class=fmt)
    _add_common(p, out_default="bench-variance.csv")
    p.add_argument("--model", choices=bench.MODELS, default="lgss")
    _add_filter(p, particles=None)
    p.add_argument("--seeds", type=int, default=50, help="number of seeds, starting at --seed")
    p.add_argument("--resampler", type=_scheme_list, default=SCHEMES,
                   help="comma-separated schemes to compare")
    p.add_argument("--prices", default=None, help="SV only: date,close CSV")
    p.add_argument("--jobs", type=int, default=1, help="worker processes across seeds")
    _add_lgss(p)
    _add_sv(p)
    p.add_argument("--sigma-v", type=float, default=None,
                   help="state noise sd (model default when omitted)")
    subs["bench-variance"] = p

    p = sub.add_parser("bench-rmse", help="RMSE against the Kalman filter", formatter_class=fmt)
    _add_common(p, out_default="bench-rmse.csv")
    p.add_argument("--model", choices=bench.MODELS, default="lgss")
    p.add_argument("--particles", type=_int_list, default=(20, 100, 500),
                   help="comma-separated particle counts")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--ess-threshold", type=_fraction, default=0.5)
    p.add_argument("--resample-every-step", action="store_true")
    p.add_argument("--resampler", type=_scheme_list, default=SCHEMES)
    p.add_argument("--jobs", type=int, default=1)
    _add_lgss(p)
    p.add_argument("--sigma-v", type=float, default=LgssParams().sigma_v)
    subs["bench-rmse"] = p

    p = sub.add_parser("bench-timing", help="wall time per resampler call", formatter_class=fmt)
    _add_common(p, out_default="bench-timing.csv")
    p.add_argument("--particles", type=_int_list, default=(5, 15, 50, 80, 100, 150))
    p.add_argument("--reps", type=int, default=1000, help="timed calls per scheme and size")
    p.add_argument("--warmup", type=int, default=100)
    p.add_argument("--resampler", type=_scheme_list, default=SCHEMES)
    subs["bench-timing"] = p

    p = sub.add_parser("check-median", help="variance of the median of 2r+1 uniforms",
                       formatter_class=fmt)
    _add_common(p, out_default=None)
    p.add_argument("--r", type=int, default=5)
    p.add_argument("--reps", type=int, default=100_000)
    subs["check-median"] = p

    return parser, subs


def _read_config(path):
    values = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise SMCError(f"cannot read config {path}: {exc.strerror or exc}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SMCError(f"config {path} line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.lstrip("-").replace("-", "_")] = value
    return values


def _apply_config(parser, subparser, argv, args):
    raw = _read_config(args.config)
    actions = {a.dest: a for a in subparser._actions if a.dest not in ("help", "config")}
    defaults = {}
    for key, value in raw.items():
        action = actions.get(key)
        if action is None:
            subparser.error(f"unknown config key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                defaults[key] = action.type(value)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                subparser.error(f"config key {key}: {exc}")
        else:
            defaults[key] = value
        if action.choices is not None and defaults[key] not in action.choices:
            subparser.error(f"config key {key}: invalid choice {value!r}")
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _resolved(args) -> str:
    cfg = {}
    for k, v in sorted(vars(args).items()):
        cfg[k] = list(v) if isinstance(v, tuple) else v
    return "config: " + json.dumps(cfg, sort_keys=True)


def _suffixed(path, suffix):
    stem, ext = os.path.splitext(path)
    return f"{stem}.{suffix}{ext or '.csv'}"


def _write(report_like, path):
    ensure_parent(path)
    write_diagnostics_csv(report_like, path)


def _run_lgss(args):
    params = LgssParams(args.phi, args.sigma_v, args.sigma_e)
    ys = bench.simulate_data("lgss", params, args.steps, args.seed)
    cfg = FilterConfig(args.particles, args.resampler, args.ess_threshold, args.seed,
                       args.resample_every_step)
    out = run_filter(lgss_model_spec(params), ys, cfg)
    _write(out, args.out)
    kf = kalman_filter(params, ys).means
    rmse = float(np.sqrt(np.mean((out.means - kf) ** 2)))
    print(f"rows={len(out)} resample_events={int(out.resample_events.sum())} "
          f"rmse_vs_kalman={rmse:.9g} out={args.out}")


def _sv_observations(args, params):
    if args.prices is not None:
        return log_returns(load_prices_csv(args.prices))
    return bench.simulate_data("sv", params, args.steps, args.seed)


def _run_sv(args):
    params = SvParams(args.mu, args.rho, args.sigma_v, args.tau)
    ys = _sv_observations(args, params)
    cfg = FilterConfig(args.particles, args.resampler, args.ess_threshold, args.seed,
                       args.resample_every_step)
    out = run_filter(sv_model_spec(params), ys, cfg)
    _write(out, args.out)
    print(f"rows={len(out)} resample_events={int(out.resample_events.sum())} out={args.out}")


def _print_table(columns, rows):
    from .dataio import format_value

    print(",".join(columns))
    for row in rows:
        print(",".join(format_value(v) for v in row))


def _bench_variance(args):
    if args.model == "lgss":
        sv = args.sigma_v if args.sigma_v is not None else LgssParams().sigma_v
        params = LgssParams(args.phi, sv, args.sigma_e)
        ys = None
        n = args.particles or 20
    else:
        sv = args.sigma_v if args.sigma_v is not None else SvParams().sigma_v
        params = SvParams(args.mu, args.rho, sv, args.tau)
        ys = log_returns(load_prices_csv(args.prices)) if args.prices else None
        n = args.particles or 25
    report = bench.compare_resampler_variance(
        args.model, params,
        schemes=args.resampler,
        seeds=range(args.seed, args.seed + args.seeds),
        n_particles=n,
        steps=args.steps,
        ys=ys,
        ess_threshold=args.ess_threshold,
        resample_every_step=args.resample_every_step,
        jobs=args.jobs,
    )
    _write(report, args.out)
    summary = _suffixed(args.out, "summary")
    write_table(summary, report.summary_columns, report.summary_rows())
    _print_table(report.summary_columns, report.summary_rows())
    if "rdd" in report.schemes:
        print(f"rdd_lowest_fraction={report.lowest_fraction('rdd'):.9g}")


def _bench_rmse(args):
    params = LgssParams(args.phi, args.sigma_v, args.sigma_e)
    report = bench.rmse_sweep(
        args.model, params,
        schemes=args.resampler,
        particle_counts=args.particles,
        seeds=range(args.seed, args.seed + args.seeds),
        steps=args.steps,
        ess_threshold=args.ess_threshold,
        resample_every_step=args.resample_every_step,
        jobs=args.jobs,
    )
    _write(report, args.out)
    write_table(_suffixed(args.out, "summary"), report.summary_columns, report.summary_rows())
    _print_table(report.summary_columns, report.summary_rows())


def _bench_timing(args):
    report = bench.time_resamplers(
        args.particles, args.reps, schemes=args.resampler, seed=args.seed, warmup=args.warmup
    )
    _write(report, args.out)
    write_table(_suffixed(args.out, "raw"), report.raw_columns, report.raw_rows())
    _print_table(report.columns, report.rows())


def _check_median(args):
    empirical, analytic = bench.median_variance_check(args.r, args.reps, args.seed)
    rel = abs(empirical - analytic) / analytic
    print(f"r={args.r} replicates={args.reps} empirical={empirical:.9g} "
          f"analytic={analytic:.9g} relative_error={rel:.9g}")
    if args.out:
        ensure_parent(args.out)
        write_table(args.out,
                    ("r", "replicates", "empirical_variance", "analytic_variance", "relative_error"),
                    [(args.r, args.reps, empirical, analytic, rel)])


HANDLERS = {
    "run-lgss": _run_lgss,
    "run-sv": _run_sv,
    "bench-variance": _bench_variance,
    "bench-rmse": _bench_rmse,
    "bench-timing": _bench_timing,
    "check-median": _check_median,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            args = _apply_config(parser, subs[args.command], argv, args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except SMCError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    print(_resolved(args))
    try:
        HANDLERS[args.command](args)
    except (SMCError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
