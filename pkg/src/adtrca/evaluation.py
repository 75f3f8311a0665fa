"""Leave-one-block-out evaluation, accuracy and ITR, and the benchmark grid runner."""
from __future__ import annotations

import contextlib
import csv
import io
import math
import platform
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np
from joblib import Parallel, delayed

from . import __version__
from .adtrca import adtrca_classify, adtrca_fit
from .ard import ArdConfig
from .cca import cca_classify
from .core import Dataset, prepare, seconds_to_samples
from .errors import ConfigurationError, InvalidDatasetError, InvalidInputError
from .linalg import residual_checks
from .reference import DEFAULT_HARMONICS, build_dictionary
from .trca import trca_classify, trca_fit

METHODS = ("cca", "trca", "trca-ensemble", "adtrca", "adtrca-ensemble")


@dataclass(frozen=True)
class CvSplit:
    train_blocks: tuple
    test_block: int


def check_complete(dataset: Dataset) -> None:
    """Raise if any block lacks a trial for some stimulus."""
    gaps = [
        (b, s) for b in dataset.blocks for s in range(dataset.n_stimuli)
        if dataset.trial(b, s) is None
    ]
    if gaps:
        shown = ", ".join(f"block {b} / stimulus {s}" for b, s in gaps[:10])
        more = f" (+{len(gaps) - 10} more)" if len(gaps) > 10 else ""
        raise InvalidDatasetError(f"incomplete blocks: missing {shown}{more}")


def leave_one_block_out(dataset: Dataset) -> list[CvSplit]:
    check_complete(dataset)
    blocks = dataset.blocks
    if len(blocks) < 2:
        raise InvalidDatasetError(f"need at least 2 complete blocks, found {len(blocks)}")
    return [CvSplit(tuple(b for b in blocks if b != test), test) for test in blocks]


def accuracy(predictions: Sequence[int], truths: Sequence[int]) -> float:
    if len(predictions) != len(truths):
        raise InvalidInputError(f"{len(predictions)} predictions for {len(truths)} truths")
    if len(truths) == 0:
        raise InvalidInputError("accuracy of an empty prediction set is undefined")
    return sum(int(p) == int(t) for p, t in zip(predictions, truths)) / len(truths)


def itr(k: int, p: float, t_seconds: float) -> float:
    """Information transfer rate in bits/min for ``k`` classes, accuracy ``p`` and ``t_seconds`` per selection.

    At ``p == 1`` the entropy terms vanish; at or below chance the rate is 0.
    """
    if k < 2:
        raise InvalidInputError(f"need at least 2 classes, got {k}")
    if not 0.0 <= p <= 1.0:
        raise InvalidInputError(f"accuracy must lie in [0, 1], got {p}")
    if not t_seconds > 0:
        raise InvalidInputError(f"selection time must be positive, got {t_seconds}")
    if p <= 1.0 / k:
        return 0.0
    bits = math.log2(k) + p * math.log2(p)
    if p < 1.0:
        bits += (1 - p) * math.log2((1 - p) / (k - 1))
    return bits * 60.0 / t_seconds


def parse_grid(spec: str) -> list[float]:
    """``start:stop:step`` (stop inclusive within 1e-9) or a comma list."""
    spec = spec.strip()
    if ":" not in spec:
        return [float(v) for v in spec.split(",") if v.strip()]
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigurationError(f"grid must be start:stop:step, got {spec!r}")
    start, stop, step = (float(v) for v in parts)
    if step <= 0 or stop < start:
        raise ConfigurationError(f"invalid grid {spec!r}")
    n = int(math.floor((stop - start) / step + 1e-9))
    return [round(start + i * step, 12) for i in range(n + 1)]


@dataclass(frozen=True)
class BenchConfig:
    n_harmonics: int = DEFAULT_HARMONICS
    ard: ArdConfig = field(default_factory=ArdConfig)
    seed: int = 0
    gaze_shift_s: float = 0.0
    latency_s: float | None = None  # None: use the dataset's latency
    test_filter: str = "class"
    identity_filter: bool = False
    check_residuals: bool = False
    n_jobs: int = 1


@dataclass(frozen=True)
class FoldResult:
    subject: str
    method: str
    tw: float
    channels: str
    n_train: int
    test_block: int
    train_blocks: tuple
    accuracy: float
    itr: float
    predictions: tuple
    truths: tuple

    @property
    def n_trials(self) -> int:
        return len(self.truths)

    @property
    def n_correct(self) -> int:
        return sum(p == t for p, t in zip(self.predictions, self.truths))


def _mean_sd(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), sd


@dataclass
class BenchReport:
    records: list
    header: dict

    CSV_FIELDS = ("subject", "method", "tw", "channels", "n_train", "test_block", "train_blocks",
                  "n_trials", "n_correct", "accuracy", "itr")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_FIELDS)
        for r in self.records:
            w.writerow([r.subject, r.method, repr(r.tw), r.channels, r.n_train, r.test_block,
                        " ".join(map(str, r.train_blocks)), r.n_trials, r.n_correct,
                        repr(r.accuracy), repr(r.itr)])
        return buf.getvalue()

    def predictions_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["subject", "method", "tw", "channels", "n_train", "test_block", "truth", "prediction"])
        for r in self.records:
            for t, p in zip(r.truths, r.predictions):
                w.writerow([r.subject, r.method, repr(r.tw), r.channels, r.n_train, r.test_block, t, p])
        return buf.getvalue()

    def aggregates(self) -> list[dict]:
        """Mean and sd per (method, tw, channels, n_train).

        With several subjects the spread is over per-subject means; with one
        subject it is over folds.
        """
        cells: dict = {}
        for r in self.records:
            cells.setdefault((r.method, r.tw, r.channels, r.n_train), {}).setdefault(r.subject, []).append(r)
        out = []
        for (method, tw, ch, n_train), by_subject in cells.items():
            if len(by_subject) > 1:
                accs = [float(np.mean([r.accuracy for r in rs])) for rs in by_subject.values()]
                itrs = [float(np.mean([r.itr for r in rs])) for rs in by_subject.values()]
            else:
                (rs,) = by_subject.values()
                accs = [r.accuracy for r in rs]
                itrs = [r.itr for r in rs]
            acc_m, acc_sd = _mean_sd(accs)
            itr_m, itr_sd = _mean_sd(itrs)
            out.append({
                "method": method, "tw": tw, "channels": ch, "n_train": n_train,
                "n_subjects": len(by_subject), "n": len(accs),
                "mean_accuracy": acc_m, "sd_accuracy": acc_sd, "mean_itr": itr_m, "sd_itr": itr_sd,
            })
        return out

    def curve_csv(self) -> str:
        """Long-format table of time window against mean accuracy per method."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        keys = ("method", "tw", "channels", "n_train", "n_subjects", "n",
                "mean_accuracy", "sd_accuracy", "mean_itr", "sd_itr")
        w.writerow(keys)
        for row in self.aggregates():
            w.writerow([repr(row[k]) if isinstance(row[k], float) else row[k] for k in keys])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"header": self.header, "aggregates": self.aggregates()}

    @classmethod
    def concat(cls, reports: Sequence["BenchReport"]) -> "BenchReport":
        records = [r for rep in reports for r in rep.records]
        header = dict(reports[0].header) if reports else {}
        header["subjects"] = [s for rep in reports for s in rep.header.get("subjects", [])]
        return cls(records, header)


def _channel_label(channels) -> str:
    return "all" if channels is None else ",".join(channels)


def _train_blocks(split: CvSplit, n_train: int, seed: int) -> tuple:
    if n_train == len(split.train_blocks):
        return split.train_blocks
    rng = np.random.default_rng([seed, split.test_block, n_train])
    picked = rng.choice(len(split.train_blocks), size=n_train, replace=False)
    return tuple(sorted(split.train_blocks[i] for i in picked))


def _fold_job(data: Dataset, methods, subject, tw, ch_label, n_train, split, train_blocks,
              config: BenchConfig):
    solves: list = []
    ctx = residual_checks(solves) if config.check_residuals else contextlib.nullcontext()
    with ctx:
        test = data.subset_blocks([split.test_block])
        truths = tuple(t.stimulus_index for t in test.trials)
        train = data.subset_blocks(train_blocks)
        preds: dict = {}
        if any(m.startswith("trca") for m in methods):
            model = trca_fit(train)
            for m in ("trca", "trca-ensemble"):
                if m in methods:
                    preds[m] = tuple(trca_classify(model, t, m.endswith("ensemble"))[0] for t in test.trials)
        if "cca" in methods or any(m.startswith("adtrca") for m in methods):
            dictionary = build_dictionary(data.stimulus_frequencies_hz, config.n_harmonics,
                                          data.sampling_rate_hz, data.n_samples)
        if "cca" in methods:
            preds["cca"] = tuple(cca_classify(t, dictionary)[0] for t in test.trials)
        if any(m.startswith("adtrca") for m in methods):
            model = adtrca_fit(train, dictionary, config.ard, identity_filter=config.identity_filter,
                               test_filter=config.test_filter)
            for m in ("adtrca", "adtrca-ensemble"):
                if m in methods:
                    preds[m] = tuple(adtrca_classify(model, t, m.endswith("ensemble"))[0] for t in test.trials)

    t_sel = tw + config.gaze_shift_s
    out = []
    for m in methods:
        acc = accuracy(preds[m], truths)
        out.append(FoldResult(subject, m, tw, ch_label, n_train, split.test_block, train_blocks,
                              acc, itr(data.n_stimuli, acc, t_sel), preds[m], truths))
    return out, (len(solves), max(solves) if solves else 0.0)


def run_benchmark(dataset: Dataset | Mapping[str, Dataset], methods: Sequence[str],
                  tw_grid: Sequence[float], channel_sets: Sequence[Sequence[str] | None] = (None,),
                  n_train_grid: Sequence[int | None] = (None,),
                  config: BenchConfig = BenchConfig()) -> BenchReport:
    """Evaluate every method on every grid cell with leave-one-block-out folds.

    ``n_train_grid`` entries of ``None`` mean all remaining blocks; smaller
    values draw that many training blocks per fold from an RNG seeded by
    ``(config.seed, test_block, n_train)``, shared by all methods.
    """
    subjects = dict(dataset) if isinstance(dataset, Mapping) else {"S1": dataset}
    methods = list(methods)
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ConfigurationError(f"unknown method(s) {unknown}; choose from {list(METHODS)}")
    if not methods or not tw_grid or not channel_sets or not n_train_grid:
        raise ConfigurationError("methods and all grids must be non-empty")
    if any(tw <= 0 for tw in tw_grid):
        raise ConfigurationError("time windows must be positive")

    jobs = []
    for subject, ds in subjects.items():
        splits = leave_one_block_out(ds)
        n_avail = len(splits) - 1
        lat = ds.latency_s if config.latency_s is None else config.latency_s
        for tw in tw_grid:
            need = seconds_to_samples(lat, ds.sampling_rate_hz) + seconds_to_samples(tw, ds.sampling_rate_hz)
            if need > ds.n_samples:
                raise ConfigurationError(
                    f"TW {tw} s after latency {lat} s needs {need} samples; trials have {ds.n_samples}"
                )
        for ci, channels in enumerate(channel_sets):
            for tw in tw_grid:
                data = prepare(ds, tw, latency_s=lat, channels=channels)
                for n_req in n_train_grid:
                    n_train = n_avail if n_req is None else int(n_req)
                    if not 2 <= n_train <= n_avail:
                        raise ConfigurationError(
                            f"n_train={n_train} outside [2, {n_avail}] for subject {subject}"
                        )
                    for split in splits:
                        tb = _train_blocks(split, n_train, config.seed)
                        jobs.append(((subject, ci, tw, n_train, split.test_block),
                                     (data, methods, subject, tw, _channel_label(channels), n_train,
                                      split, tb, config)))

    results = Parallel(n_jobs=config.n_jobs)(delayed(_fold_job)(*args) for _, args in jobs)
    order = {m: i for i, m in enumerate(METHODS)}
    keyed = []
    n_solves, worst = 0, 0.0
    for (key, _), (recs, (ns, mx)) in zip(jobs, results):
        n_solves += ns
        worst = max(worst, mx)
        for r in recs:
            subject, ci, tw, n_train, tb = key
            keyed.append(((subject, order[r.method], tw, ci, n_train, tb), r))
    keyed.sort(key=lambda kr: kr[0])

    header = {
        "package_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "subjects": list(subjects),
        "methods": methods,
        "tw_grid": list(tw_grid),
        "channel_sets": [_channel_label(c) for c in channel_sets],
        "n_train_grid": list(n_train_grid),
        "itr_time": "tw + gaze_shift_s",
        "config": _config_dict(config),
    }
    if config.check_residuals:
        header["residual_checks"] = {"n_solves": n_solves, "max_relative_residual": worst}
    return BenchReport([r for _, r in keyed], header)


def _config_dict(config: BenchConfig) -> dict:
    d = asdict(config)
    d.pop("n_jobs")
    return d
