"""Command-line front end.

Exit codes: 0 success, 2 usage or input error, 3 unseparable frequencies,
4 no significant component.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import bootstrap as bs
from .kzft import KzftParams, UnseparableFrequenciesError, choose_bandwidth, kzft_apply, window_from_periods
from .mcmc import (
    AmplitudeModel,
    McmcConfig,
    align_phase,
    read_chain_csv,
    run_chain,
    summarize,
    write_chain_csv,
    write_summary_json,
)
from .pipeline import RunConfig, parse_frequency, run_pipeline, write_run
from .series import SinusoidModel, read_csv, simulate_mpc, write_csv
from .spectral import find_peaks, periodogram, read_periodogram_csv, write_periodogram_csv
from .svgplot import line_plot, write_svg

EXIT_USAGE = 2
EXIT_UNSEPARABLE = 3
EXIT_NOT_SIGNIFICANT = 4
SEED_ENV = "PCDECOMP_SEED"


class _Fail(Exception):
    def __init__(self, code: int, reason: str, message: str):
        self.code = code
        self.reason = reason
        super().__init__(message)


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _component(text: str) -> SinusoidModel:
    parts = text.split(",")
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError(f"expected A,p[,phi], got {text!r}")
    try:
        vals = [float(p) for p in parts]
        return SinusoidModel(*vals)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _frequency(text: str) -> float:
    try:
        f = parse_frequency(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a frequency: {text!r}") from None
    if not 0 < f <= 0.5:
        raise argparse.ArgumentTypeError(f"frequency must lie in (0, 0.5], got {text}")
    return f


def _resolve_seed(flag: int | None, fallback: int = 0) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise _Fail(EXIT_USAGE, "bad-seed", f"{SEED_ENV} is not an integer: {env!r}") from None
    return fallback


def _input_path(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise _Fail(EXIT_USAGE, "missing-input", f"input file not found: {path}")
    return p


def cmd_simulate(args) -> int:
    seed = _resolve_seed(args.seed)
    series = simulate_mpc(args.comp or [], args.noise_sd, args.n, seed, t0=args.t0)
    write_csv(series, args.out)
    v = series.values
    print(f"simulate: wrote {len(series)} rows to {args.out} (seed={seed} mean={v.mean():.6g} sd={v.std():.6g})")
    return 0


def cmd_periodogram(args) -> int:
    series = read_csv(_input_path(args.input))
    pg = periodogram(series)
    if args.out:
        write_periodogram_csv(pg, args.out)
    for f, p in find_peaks(pg, args.peaks, args.ratio):
        print(f"peak freq={f:.9g} period={1 / f:.6g} power={p:.6g}")
    return 0


def cmd_filter(args) -> int:
    series = read_csv(_input_path(args.input))
    if args.window is not None:
        params = KzftParams(args.window, args.iterations, args.freq)
    elif args.periods_per_window is not None:
        params = KzftParams(window_from_periods(args.periods_per_window, 1 / args.freq), args.iterations, args.freq)
    else:
        others = [f for f in (args.separate_from or []) if f != args.freq]
        params = choose_bandwidth([args.freq] + others, args.iterations, args.max_sidelobe, len(series))[0]
    comp = kzft_apply(series, params, boundary=args.boundary)
    write_csv(comp.series, args.out)
    comp.write_manifest(Path(args.out).with_suffix(".json"))
    print(f"filter: window={params.window} iterations={params.iterations} center={params.center:.9g} -> {args.out}")
    return 0


def cmd_bootstrap(args) -> int:
    series = read_csv(_input_path(args.input))
    seed = _resolve_seed(args.seed)
    plan = bs.make_block_plan(len(series), args.period)
    ens = bs.pbb_resample(series, plan, args.B, seed)
    band = bs.periodic_mean_ci(ens, args.level) if args.B >= 20 else None
    bs.write_ensemble(ens, args.out_dir, band)
    print(f"bootstrap: {args.B} resamples of {plan.n_blocks} blocks x {plan.period} -> {args.out_dir}")
    return 0


def cmd_fit(args) -> int:
    series = read_csv(_input_path(args.input))
    period = args.period if args.period is not None else 1.0 / args.freq
    phase = align_phase(series, period) if args.phase == "aligned" else float(args.phase)
    model = AmplitudeModel(period, phase, corrected=args.corrected)
    cfg = McmcConfig(
        iterations=args.iterations,
        burn_in=args.burn_in,
        init_A=args.init_A,
        init_sigma=args.init_sigma,
        proposal_sd_A=args.proposal_sd_A,
        proposal_halfwidth_sigma=args.proposal_halfwidth_sigma,
        seed=_resolve_seed(args.seed),
    )
    chain = run_chain(series, model, cfg)
    est = summarize(chain)
    if args.chain_out:
        write_chain_csv(chain, args.chain_out)
    if args.summary_out:
        write_summary_json(est, cfg, model, args.summary_out)
    print(
        f"fit: mean_A={est.mean_A:.6g} sd_A={est.sd_A:.6g} mean_sigma={est.mean_sigma:.6g} "
        f"sd_sigma={est.sd_sigma:.6g} acceptance={est.acceptance_rate:.3f} ess_A={est.ess_A:.1f}"
    )
    return 0


def cmd_pipeline(args) -> int:
    cfg_path = _input_path(args.config)
    try:
        config = RunConfig.load(cfg_path)
    except (TypeError, KeyError) as exc:
        raise _Fail(EXIT_USAGE, "bad-config", str(exc)) from None
    config.seed = _resolve_seed(args.seed, config.seed)
    if args.threads is not None:
        config.threads = args.threads
    elif config.threads is None:
        config.threads = os.cpu_count() or 1
    out_dir = args.out_dir or config.output_dir
    if not out_dir:
        raise _Fail(EXIT_USAGE, "no-output", "no output directory (use --out-dir or output_dir)")
    if config.input is not None and not Path(config.input).is_file():
        raise _Fail(EXIT_USAGE, "missing-input", f"input file not found: {config.input}")
    fit = run_pipeline(config)
    write_run(fit, config, out_dir)
    for c in fit.components:
        flag = "accepted" if c.significant else "excluded"
        print(
            f"component freq={c.frequency:.9g} period={c.period:.6g} window={c.params.window} "
            f"mean_A={c.estimate.mean_A:.6g} sd_A={c.estimate.sd_A:.6g} {flag}"
        )
    if not fit.accepted:
        raise _Fail(EXIT_NOT_SIGNIFICANT, "not-significant", f"no significant component; run written to {out_dir}")
    print(f"pipeline: run written to {out_dir}")
    return 0


def cmd_plot(args) -> int:
    paths = [_input_path(p) for p in args.input]
    lines, labels = [], []
    try:
        if args.kind == "periodogram":
            for p in paths:
                pg = read_periodogram_csv(p)
                lines.append((pg.freqs, pg.power))
                labels.append(p.stem)
        elif args.kind == "trace":
            chain = read_chain_csv(paths[0])
            lines = [(chain[:, 0], chain[:, 1])]
            labels = ["A"]
            if args.with_sigma:
                lines.append((chain[:, 0], chain[:, 2]))
                labels.append("sigma")
        else:
            if args.kind == "series" and len(paths) != 1:
                raise _Fail(EXIT_USAGE, "bad-args", "series plots take exactly one --input")
            if args.kind == "overlay" and len(paths) < 2:
                raise _Fail(EXIT_USAGE, "bad-args", "overlay plots take at least two --input files")
            for p in paths:
                s = read_csv(p)
                lines.append((s.t, s.values))
                labels.append(p.stem)
    except ValueError as exc:
        raise _Fail(EXIT_USAGE, "bad-input", str(exc)) from None
    doc = line_plot(lines, title=args.title or args.kind, labels=labels)
    write_svg(doc, args.out)
    print(f"plot: {args.kind} -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcdecomp",
        description="Band-pass / block-bootstrap / Metropolis-Hastings decomposition of periodic time series.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a sum of sinusoids plus Gaussian noise")
    p.add_argument("--comp", action="append", type=_component, metavar="A,p[,phi]",
                   help="sinusoid amplitude, period and optional phase (repeatable)")
    p.add_argument("--noise-sd", type=float, default=1.0, help="noise standard deviation (default 1)")
    p.add_argument("--n", type=_positive_int, default=300, help="number of observations (default 300)")
    p.add_argument("--t0", type=int, default=1, help="time index of the first observation (default 1)")
    p.add_argument("--seed", type=int, default=None, help=f"RNG seed (default ${SEED_ENV} or 0)")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("periodogram", help="raw periodogram and peak list")
    p.add_argument("--input", required=True, help="input t,value CSV")
    p.add_argument("--out", help="write freq,power CSV here")
    p.add_argument("--peaks", type=_positive_int, default=5, help="maximum peaks to report (default 5)")
    p.add_argument("--ratio", type=float, default=10.0, help="peak threshold as a multiple of the median (default 10)")
    p.set_defaults(func=cmd_periodogram)

    p = sub.add_parser("filter", help="KZFT band-pass one component")
    p.add_argument("--input", required=True, help="input t,value CSV")
    p.add_argument("--freq", type=_frequency, required=True, help="center frequency, e.g. 0.0667 or 1/15")
    p.add_argument("--window", type=int, help="moving-average window (odd)")
    p.add_argument("--periods-per-window", type=float, help="window as a number of periods")
    p.add_argument("--separate-from", type=_frequency, action="append",
                   help="other component frequency to reject when choosing the window (repeatable)")
    p.add_argument("--iterations", type=_positive_int, default=3, help="number of passes k (default 3)")
    p.add_argument("--max-sidelobe", type=float, default=0.05, help="max gain at rejected frequencies (default 0.05)")
    p.add_argument("--boundary", choices=("renormalize", "trim"), default="renormalize", help="edge handling")
    p.add_argument("--out", required=True, help="output CSV; a .json sidecar is written next to it")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("bootstrap", help="periodic block bootstrap of a component")
    p.add_argument("--input", required=True, help="input t,value CSV (usually a filtered component)")
    p.add_argument("--period", type=_positive_int, required=True, help="block length")
    p.add_argument("--B", type=_positive_int, default=200, help="number of resamples (default 200)")
    p.add_argument("--level", type=float, default=0.95, help="periodic-mean band level (default 0.95)")
    p.add_argument("--seed", type=int, default=None, help=f"RNG seed (default ${SEED_ENV} or 0)")
    p.add_argument("--out-dir", required=True, help="directory for resample CSVs and ci.csv")
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("fit", help="Metropolis-Hastings amplitude fit of one component")
    p.add_argument("--input", required=True, help="input t,value CSV (usually a filtered component)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--period", type=float, help="component period")
    g.add_argument("--freq", type=_frequency, help="component frequency")
    p.add_argument("--phase", default="0", help="phase in radians, or 'aligned' (default 0)")
    p.add_argument("--iterations", type=_positive_int, default=3000, help="chain length (default 3000)")
    p.add_argument("--burn-in", type=int, default=300, help="discarded initial samples (default 300)")
    p.add_argument("--init-A", type=float, default=2.0, help="initial amplitude (default 2)")
    p.add_argument("--init-sigma", type=float, default=6.0, help="initial noise sd (default 6)")
    p.add_argument("--proposal-sd-A", type=float, default=2.0, help="amplitude proposal sd (default 2)")
    p.add_argument("--proposal-halfwidth-sigma", type=float, default=0.5, help="sigma proposal half-width (default 0.5)")
    p.add_argument("--corrected", action="store_true", help="add the log(2 sigma) Jacobian to the target")
    p.add_argument("--seed", type=int, default=None, help=f"RNG seed (default ${SEED_ENV} or 0)")
    p.add_argument("--chain-out", help="write the chain CSV here")
    p.add_argument("--summary-out", help="write the summary JSON here")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("pipeline", help="run the full two-stage pipeline from a JSON config")
    p.add_argument("--config", required=True, help="RunConfig JSON (a run manifest.json also works)")
    p.add_argument("--out-dir", help="run directory (overrides output_dir in the config)")
    p.add_argument("--seed", type=int, default=None, help=f"master seed (overrides ${SEED_ENV} and the config)")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="worker threads across components (default: logical CPUs)")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("plot", help="render an SVG plot")
    p.add_argument("--kind", choices=("series", "periodogram", "trace", "overlay"), required=True, help="plot type")
    p.add_argument("--input", action="append", required=True, help="input CSV (repeatable for overlay)")
    p.add_argument("--out", required=True, help="output .svg path")
    p.add_argument("--title", default="", help="plot title")
    p.add_argument("--with-sigma", action="store_true", help="trace plots: also draw the sigma trace")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"pcdecomp: error={exc.reason} message={str(exc)!r}", file=sys.stderr)
        return exc.code
    except UnseparableFrequenciesError as exc:
        a, b = exc.pair
        print(f"pcdecomp: error=unseparable pair={a:.9g},{b:.9g} message={str(exc)!r}", file=sys.stderr)
        return EXIT_UNSEPARABLE
    except (ValueError, OSError) as exc:
        print(f"pcdecomp: error=invalid message={str(exc)!r}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
