"""Command-line entry point.

Exit status: 0 on success, 2 for usage or input errors, 3 when the spectrum
is numerically degenerate. Standard output only ever carries CSV.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
import warnings
from dataclasses import replace

import numpy as np

from . import bench
from .errors import ConfigError, DegenerateSpectrumError, InvalidSpecError
from .estimators import ESTIMATORS, EstimatorParams, estimate
from .sdft import SdftConfig, SlidingDFT

log = logging.getLogger("sdftfreq")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DEGENERATE = 3

FORMATS = ("csv-iq", "raw-f64le-iq")
SWEEP_DAMPINGS = (0.8, 0.9, 0.95, 0.99)


class InputError(Exception):
    pass


def read_samples(path, fmt):
    """Decode a sample file into a complex128 array."""
    try:
        if fmt == "raw-f64le-iq":
            raw = np.fromfile(path, dtype="<f8")
            if raw.size % 2:
                raise InputError(f"{path}: odd number of float64 values, expected re,im pairs")
            return raw[0::2] + 1j * raw[1::2]
        if fmt == "csv-iq":
            return _read_csv_iq(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    raise InputError(f"unknown sample format {fmt!r}")


def _read_csv_iq(path):
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if lineno == 1 and parts[:3] == ["index", "re", "im"]:
                continue
            if len(parts) != 3:
                raise InputError(f"{path}:{lineno}: expected index,re,im")
            try:
                values.append(complex(float(parts[1]), float(parts[2])))
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
    return np.array(values, dtype=np.complex128)


def cmd_estimate(args):
    samples = read_samples(args.file, args.format)
    if samples.size < args.n_bins:
        raise InputError(
            f"{args.file}: {samples.size} samples decoded, at least {args.n_bins} required"
        )
    config = SdftConfig(args.n_bins, args.damping)
    state = SlidingDFT(config).extend(samples[-args.n_bins :])
    result = estimate(
        state.snapshot(),
        EstimatorParams(args.n_bins, args.damping),
        args.estimator,
        args.sample_rate,
    )
    print(
        ",".join(
            [
                result.estimator_id,
                str(result.peak_index),
                format(result.delta, ".17g"),
                format(result.omega, ".17g"),
                format(result.freq_hz, ".17g"),
                "1" if result.clamped else "0",
            ]
        )
    )
    return EXIT_OK


def _float_list(text):
    return tuple(float(t) for t in text.split(",") if t.strip())


def _snr_list(text):
    return tuple(bench._parse_snr(t.strip()) for t in text.split(",") if t.strip())


def _str_list(text):
    return tuple(t.strip() for t in text.split(",") if t.strip())


def build_spec(args, sweep=False):
    base = bench.ExperimentSpec()
    if sweep:
        base = replace(base, damping_list=SWEEP_DAMPINGS)
    if args.config:
        spec = bench.load_config(args.config, base)
    else:
        spec = base
    overrides = {
        "n_bins": args.n_bins,
        "sample_rate_hz": args.sample_rate_hz,
        "freq_list_hz": args.freqs,
        "damping_list": args.damping,
        "snr_db_list": args.snr_db,
        "trials": args.trials,
        "base_seed": args.seed,
        "estimators": args.estimators,
        "randomize_phase": True if args.randomize_phase else None,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    try:
        return replace(spec, **overrides)
    except InvalidSpecError as exc:
        raise ConfigError(str(exc), list(overrides)) from exc


def cmd_bench(args, sweep=False):
    spec = build_spec(args, sweep=sweep)
    start = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        stats = bench.run_experiment(spec, workers=args.workers)
    for w in caught:
        log.warning("%s", w.message)
    if args.output and args.output != "-":
        bench.emit_csv(stats, args.output)
    else:
        bench.emit_csv(stats, sys.stdout)
    log.info("%d cells in %.2f s", len(stats), time.perf_counter() - start)
    return EXIT_OK


def _add_bench_args(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", help="key=value experiment file")
    src.add_argument("--defaults", action="store_true", help="run the default experiment")
    p.add_argument("--n-bins", type=int)
    p.add_argument("--sample-rate-hz", type=float)
    p.add_argument("--freqs", type=_float_list, help="comma-separated tone frequencies in Hz")
    p.add_argument("--damping", type=_float_list, help="comma-separated damping factors")
    p.add_argument("--snr-db", type=_snr_list, help="comma-separated SNRs; 'none' = noiseless")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--estimators", type=_str_list)
    p.add_argument("--randomize-phase", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output", help="CSV destination (default: stdout)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sdftfreq", description="Damped sliding-DFT frequency estimation"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate the frequency of a tone in a sample file")
    est.add_argument("file")
    est.add_argument("--format", choices=FORMATS, default="csv-iq")
    est.add_argument("--sample-rate", type=float, required=True, help="sample rate in Hz")
    est.add_argument("--n-bins", type=int, default=128)
    est.add_argument("--damping", type=float, default=0.9)
    est.add_argument("--estimator", choices=ESTIMATORS, default="proposed")
    est.set_defaults(func=cmd_estimate)

    b = sub.add_parser("bench", help="Monte-Carlo bias/RMSE experiment, CSV output")
    _add_bench_args(b)
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("sweep", help="bench over the damping sweep 0.8,0.9,0.95,0.99")
    _add_bench_args(s)
    s.set_defaults(func=lambda a: cmd_bench(a, sweep=True))
    return parser


def main(argv=None):
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s: %(message)s", stream=sys.stderr, force=True
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (InputError, ConfigError, InvalidSpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateSpectrumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE

