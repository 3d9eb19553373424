"""``jac`` command line: simulate, estimate, sweep, crlb, bench.

Exit status 1 means an invalid configuration or arguments, 2 an I/O error.
"""

from __future__ import annotations

import argparse
from dataclasses import replace
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import harness
from .array_model import ArrayConfig, MODEL_TAGS, SourcePosition, channel_for, synthesize_received
from .jac_estimators import GdConfig, IsfConfig, NORMALIZATIONS, jac_estimate
from .music import MusicConfig, PowerIterationError
from .signal_io import FORMATS, SignalFormatError, read_signal, write_signal

EXIT_CONFIG = 1
EXIT_IO = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    return [int(v) for v in _floats(text)]


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("JAC_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"JAC_SEED must be an integer, got {env!r}")


def _array_args(p):
    p.add_argument("--carrier-hz", type=float, default=30e9)
    p.add_argument("--spacing-m", type=float, default=None, help="default: half wavelength")
    p.add_argument("--physical-c", action="store_true",
                   help="use c = 299792458 m/s instead of 3e8")


def _common(p):
    p.add_argument("--out", type=Path, default=None, help="output file (default: stdout)")
    p.add_argument("--seed", type=int, default=None, help="overrides JAC_SEED")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jac", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="write a synthetic received-signal file")
    p.add_argument("--n-antennas", type=int, default=200)
    p.add_argument("--snapshots", type=int, default=8)
    p.add_argument("--r", type=float, required=True, help="user distance, m")
    p.add_argument("--theta-deg", type=float, default=0.0)
    p.add_argument("--snr-db", type=float, default=math.inf)
    p.add_argument("--model", choices=MODEL_TAGS, default="exact")
    p.add_argument("--signal-format", choices=FORMATS, default=None)
    _array_args(p)
    _common(p)

    p = sub.add_parser("estimate", help="estimate channel and position from a signal file")
    p.add_argument("signal", type=Path)
    p.add_argument("--method", choices=("isf", "gd", "music"), default="gd")
    p.add_argument("--signal-format", choices=FORMATS, default=None)
    p.add_argument("--xi", type=int, default=None)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--normalize", choices=NORMALIZATIONS, default="none")
    p.add_argument("--music-grid", type=int, default=4096)
    p.add_argument("--truth-r", type=float, default=None, help="true distance, for nmse_db")
    p.add_argument("--truth-theta-deg", type=float, default=None)
    p.add_argument("--truth-model", choices=MODEL_TAGS, default="exact")
    p.add_argument("--dump-autocorr", type=Path, default=None, help="write eta,c_hat CSV")
    _array_args(p)
    _common(p)

    p = sub.add_parser("sweep", help="run a Monte-Carlo sweep from a YAML spec")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--dry-run", action="store_true", help="list planned trials and their seeds")
    _common(p)

    p = sub.add_parser("crlb", help="tabulate CRLBs over a parameter grid")
    p.add_argument("--config", type=Path, default=None, help="YAML with CrlbGrid keys")
    p.add_argument("--theta-deg", type=_floats, default=None)
    p.add_argument("--r", type=_floats, default=None)
    p.add_argument("--snr-db", type=_floats, default=None)
    p.add_argument("--snapshots", type=_ints, default=None)
    p.add_argument("--n-antennas", type=int, default=None)
    _common(p)

    p = sub.add_parser("bench", help="runtime scaling versus array size")
    p.add_argument("--n-list", type=_ints, default=[256, 512, 1024, 2048])
    p.add_argument("--snapshots", type=int, default=64)
    p.add_argument("--method", choices=("jac_isf", "jac_gd", "polar_grid"), default="jac_isf")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--min-time", type=float, default=0.5, help="minimum timed seconds per size")
    _common(p)
    return parser


def _array(args, n: int) -> ArrayConfig:
    return ArrayConfig(n, args.carrier_hz, args.spacing_m, ideal_c=not args.physical_c)


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _table(rows, header, fmt):
    if fmt == "json":
        return harness.rows_to_json(rows)
    return harness.rows_to_csv(rows, header)


def _cmd_simulate(args):
    if args.out is None:
        raise UsageError("simulate requires --out")
    cfg = _array(args, args.n_antennas)
    pos = SourcePosition.from_degrees(args.r, args.theta_deg)
    sig = synthesize_received(cfg, pos, args.snapshots, args.snr_db, _seed(args), args.model)
    write_signal(args.out, sig.samples, args.signal_format)


def _cmd_estimate(args):
    y = read_signal(args.signal, args.signal_format)
    cfg = _array(args, y.shape[0])
    isf = IsfConfig(args.delta, args.xi)
    gd = GdConfig(xi=args.xi)
    est = jac_estimate(y, cfg, args.method, isf, gd, MusicConfig(grid_size=args.music_grid),
                       normalize=args.normalize)
    h_true = None
    if args.truth_r is not None:
        pos = SourcePosition.from_degrees(args.truth_r, args.truth_theta_deg or 0.0)
        h_true = channel_for(cfg, pos, args.truth_model)
    if args.dump_autocorr is not None:
        from .spatial_autocorr import autocorr_spectrum
        args.dump_autocorr.write_text(autocorr_spectrum(y, est.diagnostics.get("xi")).to_csv())
    _emit(est.to_json(h_true) + "\n", args.out)


def _cmd_sweep(args):
    spec = harness.SweepSpec.from_yaml(args.config.read_text())
    if args.seed is not None or "JAC_SEED" in os.environ:
        spec = replace(spec, seed=_seed(args))
    if args.dry_run:
        lines = ["value_index,value,trial,seed"]
        lines += [f"{vi},{v!r},{ti},{s}" for vi, v, ti, s in harness.plan(spec)]
        _emit("\n".join(lines) + "\n", args.out)
        return
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    rows = harness.run_sweep(spec, args.threads)
    _emit(_table(rows, harness.SWEEP_HEADER, args.format), args.out)


def _cmd_crlb(args):
    import yaml
    kw = {}
    if args.config is not None:
        data = yaml.safe_load(args.config.read_text()) or {}
        if not isinstance(data, dict):
            raise harness.SpecError("crlb config must be a key/value mapping")
        unknown = set(data) - set(harness.CrlbGrid.__dataclass_fields__)
        if unknown:
            raise harness.SpecError(f"unknown config keys: {sorted(unknown)}")
        kw.update({k: tuple(v) if isinstance(v, list) else v for k, v in data.items()})
    for key, val in (("theta_deg", args.theta_deg), ("r_m", args.r), ("snr_db", args.snr_db),
                     ("snapshots", args.snapshots), ("n_antennas", args.n_antennas)):
        if val is not None:
            kw[key] = tuple(val) if isinstance(val, list) else val
    rows = harness.crlb_rows(harness.CrlbGrid(**kw))
    _emit(_table(rows, harness.CRLB_HEADER, args.format), args.out)


def _cmd_bench(args):
    bc = harness.BenchConfig(snapshots=args.snapshots, reps=args.reps, seed=_seed(args),
                             min_total_s=args.min_time)
    rows = harness.run_complexity_bench(args.n_list, method=args.method, bench=bc)
    _emit(_table(rows, ["method", "N", "median_ns", "ratio"], args.format), args.out)


COMMANDS = {"simulate": _cmd_simulate, "estimate": _cmd_estimate, "sweep": _cmd_sweep,
            "crlb": _cmd_crlb, "bench": _cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            raise UsageError("jac: error: a subcommand is required")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except (harness.SpecError, SignalFormatError, ValueError, PowerIterationError) as exc:
        print(f"jac: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"jac: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
