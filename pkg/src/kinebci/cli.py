"""Command-line entry point: ``kinebci {synth,fit,eval,simulate,replay}``.

Exit codes: 0 success, 2 usage, 3 data/validation, 4 numerical (rank deficiency).
Stochastic commands need ``--seed`` (or the ``KINEBCI_SEED`` environment variable).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .decoder import FitOptions, dumps_model, evaluate, loads_model
from .errors import KinebciError, RankDeficiencyError
from .gesture import ReplayConfig, replay, write_stream
from .protocol import SessionConfig, calibrate, compute_stats, format_report, run_test_phase, run_training_phase
from .recording import read_recording, write_recording
from .signal import AcquisitionConfig
from .synth import IntentPolicy, SyntheticSubject, canonical_axis

log = logging.getLogger("kinebci")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _nonneg_float(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def _pos_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return value


def _pos_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _default_seed():
    env = os.environ.get("KINEBCI_SEED")
    return int(env) if env not in (None, "") else None


def _add_seed(p, required_help):
    p.add_argument("--seed", type=int, default=_default_seed(), help=required_help)


def _require_seed(parser, args):
    if args.seed is None:
        parser.error("--seed is required (or set KINEBCI_SEED)")


def _subject(args):
    subject = SyntheticSubject.random(args.channels, args.lags, 0.0, seed=args.subject_seed)
    return subject


def cmd_synth(args, parser):
    _require_seed(parser, args)
    if args.subject_seed is None:
        args.subject_seed = args.seed
    cfg = SessionConfig(n_training_trials=args.trials, trial_duration=args.duration, axis=args.axis,
                        acquisition=AcquisitionConfig(fs=args.fs, n_channels=args.channels))
    subject = _subject(args)
    if args.snr is not None:
        probe = run_training_phase(cfg, subject, args.seed)
        sigma = subject.sigma_for_snr(probe.u, probe.v, args.snr)
    else:
        sigma = args.sigma
    rec = run_training_phase(cfg, subject.with_sigma(sigma), args.seed, filtered=args.filtered)
    digest = write_recording(rec, args.out)
    print(f"wrote {len(rec)} samples to {args.out}")
    print(f"sigma {sigma!r}")
    print(f"sha256 {digest}")
    return EXIT_OK


def cmd_fit(args, parser):
    rec = read_recording(args.recording)
    for ridge in args.ridge_sweep or ():
        m = calibrate(rec, FitOptions(ridge, args.standardize), args.lags)
        norm = float(np.sqrt(sum(np.sum(m.weights[a] ** 2) for a in m.axes)))
        log.info("ridge=%r weight_norm=%r", ridge, norm)
        print(f"ridge {ridge!r} weight_norm {norm!r}")
    model = calibrate(rec, FitOptions(args.ridge, args.standardize), args.lags,
                      provenance={"source_sha256": _sha256(args.recording)})
    Path(args.out).write_text(dumps_model(model), encoding="ascii")
    print(f"wrote model ({', '.join(model.axes)}; {model.width} coefficients per axis) to {args.out}")
    print(f"sha256 {_sha256(args.out)}")
    return EXIT_OK


def cmd_eval(args, parser):
    model = loads_model(Path(args.model).read_text(encoding="ascii"))
    rec = read_recording(args.recording)
    report = evaluate(model, rec)
    for a in model.axes:
        r = "undefined" if report.r[a] is None else f"{report.r[a]:.6f}"
        print(f"axis {a} r {r} rmse {report.rmse[a]:.6g} n {report.n_samples}")
    if args.plot_out:
        with open(args.plot_out, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", *(f"{k}_{a}" for a in model.axes for k in ("observed", "decoded"))])
            for i, t in enumerate(report.t):
                row = [int(t)]
                for a in model.axes:
                    row += [repr(float(report.observed[a][i])), repr(float(report.decoded[a][i]))]
                writer.writerow(row)
    return EXIT_OK


def cmd_simulate(args, parser):
    if not args.seed:
        env = _default_seed()
        if env is None:
            parser.error("--seed is required (or set KINEBCI_SEED)")
        args.seed = [env]
    model = loads_model(Path(args.model).read_text(encoding="ascii"))
    cfg = SessionConfig(test_timeout=args.timeout, trials_per_run=args.trials_per_run, axis=args.axis,
                        target_halfwidth=args.halfwidth, prerun=args.prerun,
                        acquisition=AcquisitionConfig(fs=args.fs, n_channels=model.n_channels))
    args.channels = model.n_channels
    subject = _subject(args).with_sigma(args.sigma)
    policy = IntentPolicy(args.gain, args.cap)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs = []
    with open(out / "trials.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["seed", "trial", "target", "outcome", "time_to_hit", "start", "stop"])
        for seed in sorted(set(args.seed)):
            trials, rec = run_test_phase(model, subject, policy, cfg, seed)
            write_recording(rec, out / f"run_{seed}.csv")
            runs.append(trials)
            for i, tr in enumerate(trials):
                writer.writerow([seed, i, tr.side, tr.outcome,
                                 "" if tr.time_to_hit is None else repr(tr.time_to_hit),
                                 tr.start, tr.stop])
    report = format_report({canonical_axis(args.axis): compute_stats(runs)})
    (out / "report.txt").write_text(report, encoding="ascii")
    sys.stdout.write(report)
    return EXIT_OK


def cmd_replay(args, parser):
    rec = read_recording(args.recording)
    commands = replay(rec, ReplayConfig(args.rate, args.dead_zone, canonical_axis(args.axis)))
    n = write_stream(commands, args.out)
    print(f"wrote {len(commands)} commands ({n} bytes) to {args.out}")
    print(f"sha256 {_sha256(args.out)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kinebci", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a training-phase recording")
    p.add_argument("--out", required=True)
    p.add_argument("--axis", choices=("horizontal", "vertical"), default="horizontal")
    _add_seed(p, "session seed (pursuit trajectories and noise)")
    p.add_argument("--subject-seed", type=int, default=None, help="encoding-weight seed (default: --seed)")
    noise = p.add_mutually_exclusive_group()
    noise.add_argument("--sigma", type=_nonneg_float, default=1.0, help="noise std in microvolts")
    noise.add_argument("--snr", type=_pos_float, default=None, help="signal/noise power ratio")
    p.add_argument("--trials", type=_pos_int, default=5)
    p.add_argument("--duration", type=_pos_float, default=60.0, help="seconds per trial")
    p.add_argument("--fs", type=_pos_float, default=128.0)
    p.add_argument("--channels", type=_pos_int, default=14)
    p.add_argument("--lags", type=int, default=5, help="lags of the subject's encoding")
    p.add_argument("--filtered", action="store_true", help="apply the acquisition filter chain")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="calibrate a decoder from a recording")
    p.add_argument("--recording", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ridge", type=_nonneg_float, default=0.0)
    p.add_argument("--ridge-sweep", type=_nonneg_float, nargs="+", default=None)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--lags", type=int, default=5)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="decoded vs observed velocity")
    p.add_argument("--model", required=True)
    p.add_argument("--recording", required=True)
    p.add_argument("--plot-out", default=None, help="CSV of observed/decoded velocity per sample")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="closed-loop test-phase runs, one per seed")
    p.add_argument("--model", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, nargs="+", default=None)
    p.add_argument("--subject-seed", type=int, required=True)
    p.add_argument("--sigma", type=_nonneg_float, default=0.0)
    p.add_argument("--lags", type=int, default=5, help="lags of the subject's encoding")
    p.add_argument("--axis", choices=("horizontal", "vertical"), default="horizontal")
    p.add_argument("--trials-per-run", type=_pos_int, default=6)
    p.add_argument("--timeout", type=_pos_float, default=15.0)
    p.add_argument("--halfwidth", type=_pos_float, default=0.1)
    p.add_argument("--prerun", type=_nonneg_float, default=2.0)
    p.add_argument("--gain", type=_pos_float, default=2.0)
    p.add_argument("--cap", type=_pos_float, default=0.5)
    p.add_argument("--fs", type=_pos_float, default=128.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="replay cursor positions as gesture wire commands")
    p.add_argument("--recording", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rate", type=_pos_float, default=8.0)
    p.add_argument("--dead-zone", type=_nonneg_float, default=0.0)
    p.add_argument("--axis", choices=("horizontal", "vertical"), default="horizontal")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, parser)
    except RankDeficiencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (KinebciError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
