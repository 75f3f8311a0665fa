"""Command-line entry point: synth, convert, train, classify, bench, itr."""
from __future__ import annotations

import argparse
import json
import os
import platform
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .adtrca import TEST_FILTER_MODES, adtrca_classify, adtrca_fit
from .ard import ArdConfig
from .cca import cca_classify
from .core import prepare
from .dataio import atomic_write, import_csv, load_dataset, load_model, model_bytes, save_dataset
from .errors import ConfigurationError, SsvepError
from .evaluation import METHODS, BenchConfig, accuracy, itr, parse_grid, run_benchmark
from .reference import DEFAULT_HARMONICS, build_dictionary
from .synth import EPOC_FREQUENCIES, NOISE_KINDS, SynthConfig, generate
from .trca import TrcaModel, trca_classify, trca_fit

MODEL_FILE = "model.ssvf"


def _versions() -> dict:
    return {"adtrca": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def _write_run_metadata(out: Path, command: str, args: argparse.Namespace, extra: dict | None = None):
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    meta = {"command": command, "config": cfg, "seed": cfg.get("seed"), "versions": _versions()}
    if extra:
        meta.update(extra)
    atomic_write(out / "run.json", json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _ard_config(args) -> ArdConfig:
    return ArdConfig(max_iters=args.ard_max_iters, tol=args.ard_tol)


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        frequencies=tuple(float(f) for f in _csv_list(args.freqs)),
        fs=args.fs, n_channels=args.n_channels, n_blocks=args.blocks, tw=args.tw,
        n_harmonics_signal=args.nh_signal, snr_db=args.snr_db, structured_noise=args.noise,
        mixing_seed=args.mixing_seed, noise_seed=args.noise_seed, latency_s=args.latency,
    )
    ds = generate(cfg)
    out = Path(args.out)
    save_dataset(ds, out)
    _write_run_metadata(out, "synth", args)
    print(f"wrote {len(ds.trials)} trials ({ds.n_blocks} blocks x {ds.n_stimuli} targets, "
          f"{ds.n_channels} channels, {ds.n_samples} samples) to {out}")
    return 0


def cmd_convert(args) -> int:
    ds = import_csv(args.csv_dir, args.manifest)
    out = Path(args.out)
    save_dataset(ds, out)
    _write_run_metadata(out, "convert", args)
    print(f"converted {len(ds.trials)} trials to {out}")
    return 0


def _prepared(ds, tw, latency, channels):
    return prepare(ds, tw, latency_s=latency, channels=channels)


def cmd_train(args) -> int:
    if args.method == "cca":
        raise ConfigurationError("cca needs no training; use `classify --method cca`")
    ds = load_dataset(args.dataset)
    channels = _csv_list(args.channels) if args.channels else None
    latency = ds.latency_s if args.latency is None else args.latency
    data = _prepared(ds, args.tw, latency, channels)
    ensemble = args.method.endswith("ensemble")
    if args.method.startswith("adtrca"):
        dictionary = build_dictionary(data.stimulus_frequencies_hz, args.nh, data.sampling_rate_hz, data.n_samples)
        model = adtrca_fit(data, dictionary, _ard_config(args),
                           identity_filter=args.debug_identity_filter, test_filter=args.test_filter)
    else:
        model = trca_fit(data)
    model = replace(model, meta={**model.meta, "method": args.method, "ensemble": ensemble,
                                 "tw": args.tw, "latency_s": latency})
    out = Path(args.out)
    atomic_write(out / MODEL_FILE, model_bytes(model))
    _write_run_metadata(out, "train", args)
    print(f"trained {args.method} on {len(data.trials)} trials; model written to {out / MODEL_FILE}")
    return 0


def cmd_classify(args) -> int:
    ds = load_dataset(args.dataset)
    if args.model:
        model = load_model(args.model)
        meta = model.meta
        data = _prepared(ds, meta["tw"], meta["latency_s"], meta["channel_names"])
        ensemble = bool(meta.get("ensemble", False))
        method = meta.get("method", "trca")
        if isinstance(model, TrcaModel):
            classify = lambda x: trca_classify(model, x, ensemble)
        else:
            classify = lambda x: adtrca_classify(model, x, ensemble)
    elif args.method == "cca":
        if args.tw is None:
            raise ConfigurationError("classify --method cca needs --tw")
        channels = _csv_list(args.channels) if args.channels else None
        latency = ds.latency_s if args.latency is None else args.latency
        data = _prepared(ds, args.tw, latency, channels)
        dictionary = build_dictionary(data.stimulus_frequencies_hz, args.nh, data.sampling_rate_hz, data.n_samples)
        method = "cca"
        classify = lambda x: cca_classify(x, dictionary)
    else:
        raise ConfigurationError("classify needs --model, or --method cca")

    lines = ["block,truth,prediction," + ",".join(f"feature_{s}" for s in range(data.n_stimuli))]
    preds, truths = [], []
    for t in sorted(data.trials, key=lambda t: (t.block_index, t.stimulus_index)):
        p, feats = classify(t)
        preds.append(p)
        truths.append(t.stimulus_index)
        lines.append(f"{t.block_index},{t.stimulus_index},{p}," + ",".join(repr(float(f)) for f in feats))
    acc = accuracy(preds, truths)
    out = Path(args.out)
    atomic_write(out / "predictions.csv", "\n".join(lines) + "\n")
    _write_run_metadata(out, "classify", args, {"method": method, "accuracy": acc})
    print(f"{method}: accuracy {acc:.4f} on {len(truths)} trials")
    return 0


def cmd_bench(args) -> int:
    methods = _csv_list(args.methods)
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ConfigurationError(f"unknown method(s) {unknown}; choose from {', '.join(METHODS)}")
    tw_grid = parse_grid(args.tw)
    channel_sets = [_csv_list(c) for c in args.channels] if args.channels else [None]
    n_train = [int(v) for v in _csv_list(args.n_train)] if args.n_train else [None]
    subjects = {}
    for p in args.datasets:
        name = Path(p).stem if Path(p).is_file() else Path(p).name
        if name in subjects:
            raise ConfigurationError(f"duplicate subject name {name!r}")
        subjects[name] = load_dataset(p)
    cfg = BenchConfig(n_harmonics=args.nh, ard=_ard_config(args), seed=args.seed,
                      gaze_shift_s=args.gaze_shift, latency_s=args.latency, test_filter=args.test_filter,
                      identity_filter=args.debug_identity_filter, n_jobs=args.workers)
    report = run_benchmark(subjects, methods, tw_grid, channel_sets, n_train, cfg)

    out = Path(args.out)
    atomic_write(out / "bench.csv", report.to_csv())
    atomic_write(out / "predictions.csv", report.predictions_csv())
    atomic_write(out / "curve.csv", report.curve_csv())
    atomic_write(out / "summary.json", json.dumps(report.summary(), indent=2, default=str) + "\n")
    _write_run_metadata(out, "bench", args)
    for row in report.aggregates():
        print(f"{row['method']:>16s}  tw={row['tw']:<4g} ch={row['channels']:<12s} n_train={row['n_train']:<3d}"
              f" acc={row['mean_accuracy']:.4f}±{row['sd_accuracy']:.4f}  itr={row['mean_itr']:.2f}")
    return 0


def cmd_itr(args) -> int:
    print(f"{itr(args.k, args.p, args.t + args.gaze_shift):.3f}")
    return 0


def _add_fit_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nh", type=int, default=DEFAULT_HARMONICS, help="reference harmonics (default 5)")
    p.add_argument("--ard-tol", type=float, default=ArdConfig.tol)
    p.add_argument("--ard-max-iters", type=int, default=ArdConfig.max_iters)
    p.add_argument("--latency", type=float, default=None, help="override the dataset's latency (s)")
    p.add_argument("--test-filter", choices=TEST_FILTER_MODES, default="class")
    p.add_argument("--debug-identity-filter", action="store_true",
                   help="force identity temporal filters (adTRCA reduces to TRCA)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="adtrca", description=__doc__, allow_abbrev=False)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset", allow_abbrev=False)
    p.add_argument("--out", required=True)
    p.add_argument("--freqs", default=",".join(str(f) for f in EPOC_FREQUENCIES))
    p.add_argument("--fs", type=float, default=128.0)
    p.add_argument("--n-channels", type=int, default=2)
    p.add_argument("--blocks", type=int, default=4)
    p.add_argument("--tw", type=float, default=1.0, help="trial duration after latency (s)")
    p.add_argument("--latency", type=float, default=0.0)
    p.add_argument("--nh-signal", type=int, default=3)
    p.add_argument("--snr-db", type=float, default=0.0)
    p.add_argument("--noise", choices=NOISE_KINDS, default="none")
    p.add_argument("--mixing-seed", type=int, default=0)
    p.add_argument("--noise-seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("convert", help="import block{b}_target{t}.csv files", allow_abbrev=False)
    p.add_argument("csv_dir")
    p.add_argument("--manifest", required=True, help="JSON with fs, frequencies, channel names, n_blocks")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("train", help="fit a model on all blocks of a dataset", allow_abbrev=False)
    p.add_argument("dataset")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--tw", type=float, required=True)
    p.add_argument("--channels", default=None, help="comma-separated channel names")
    p.add_argument("--out", required=True)
    _add_fit_options(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="classify every trial of a dataset", allow_abbrev=False)
    p.add_argument("dataset")
    p.add_argument("--model", default=None)
    p.add_argument("--method", choices=("cca",), default=None)
    p.add_argument("--tw", type=float, default=None)
    p.add_argument("--channels", default=None)
    p.add_argument("--nh", type=int, default=DEFAULT_HARMONICS)
    p.add_argument("--latency", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("bench", help="leave-one-block-out benchmark over a grid", allow_abbrev=False)
    p.add_argument("datasets", nargs="+", help="one dataset per subject")
    p.add_argument("--methods", required=True, help=f"comma list from {', '.join(METHODS)}")
    p.add_argument("--tw", required=True, help="start:stop:step (inclusive) or comma list, seconds")
    p.add_argument("--channels", action="append", default=None,
                   help="comma-separated channel set; repeat for several sets")
    p.add_argument("--n-train", default=None, help="comma list of training-block counts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--gaze-shift", type=float, default=0.0, help="seconds added to TW in the ITR")
    p.add_argument("--out", required=True)
    _add_fit_options(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("itr", help="information transfer rate in bits/min", allow_abbrev=False)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--gaze-shift", type=float, default=0.0)
    p.set_defaults(func=cmd_itr)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SsvepError, OSError) as exc:
        print(f"adtrca {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
