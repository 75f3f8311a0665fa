"""Trial and dataset containers plus the per-trial preprocessing ops.

Trials are stored channel-major, ``samples[channel, sample]``. All containers
are immutable: arrays are copied on construction and flagged read-only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ChannelLookupError,
    InvalidDatasetError,
    InvalidInputError,
    OutOfRangeError,
)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def seconds_to_samples(seconds: float, fs: float) -> int:
    """Convert a duration to a sample count, rounding half away from zero."""
    x = seconds * fs
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass(frozen=True, eq=False)
class Trial:
    samples: np.ndarray
    stimulus_index: int
    block_index: int

    def __post_init__(self):
        x = _frozen(self.samples)
        if x.ndim != 2:
            raise InvalidInputError(f"trial must be 2-D (channel x sample), got shape {x.shape}")
        if x.shape[0] < 1 or x.shape[1] < 2:
            raise InvalidInputError(f"trial needs >= 1 channel and >= 2 samples, got {x.shape}")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "stimulus_index", int(self.stimulus_index))
        object.__setattr__(self, "block_index", int(self.block_index))

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    def with_samples(self, samples) -> "Trial":
        return Trial(samples, self.stimulus_index, self.block_index)

    def same_as(self, other: "Trial") -> bool:
        return (
            self.stimulus_index == other.stimulus_index
            and self.block_index == other.block_index
            and np.array_equal(self.samples, other.samples)
        )


@dataclass(frozen=True, eq=False)
class Dataset:
    trials: tuple
    sampling_rate_hz: float
    stimulus_frequencies_hz: tuple
    n_blocks: int
    channel_names: tuple
    latency_s: float = 0.0
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        trials = tuple(self.trials)
        freqs = tuple(float(f) for f in self.stimulus_frequencies_hz)
        names = tuple(str(c) for c in self.channel_names)
        fs = float(self.sampling_rate_hz)
        object.__setattr__(self, "trials", trials)
        object.__setattr__(self, "stimulus_frequencies_hz", freqs)
        object.__setattr__(self, "channel_names", names)
        object.__setattr__(self, "sampling_rate_hz", fs)
        object.__setattr__(self, "n_blocks", int(self.n_blocks))
        object.__setattr__(self, "latency_s", float(self.latency_s))

        if fs <= 0:
            raise InvalidDatasetError(f"sampling rate must be positive, got {fs}")
        if not freqs or any(f <= 0 for f in freqs):
            raise InvalidDatasetError("stimulus frequencies must be a non-empty list of positive values")
        if any(f >= fs / 2 for f in freqs):
            raise InvalidDatasetError(f"stimulus frequencies must lie below Nyquist ({fs / 2} Hz)")
        if not trials:
            raise InvalidDatasetError("dataset has no trials")
        shape = trials[0].samples.shape
        index = {}
        for t in trials:
            if t.samples.shape != shape:
                raise InvalidDatasetError(
                    f"trial (block {t.block_index}, stimulus {t.stimulus_index}) has shape "
                    f"{t.samples.shape}, expected {shape}"
                )
            if not 0 <= t.stimulus_index < len(freqs):
                raise InvalidDatasetError(f"stimulus index {t.stimulus_index} out of range")
            key = (t.block_index, t.stimulus_index)
            if key in index:
                raise InvalidDatasetError(f"duplicate trial for block {key[0]}, stimulus {key[1]}")
            index[key] = t
        if len(names) != shape[0]:
            raise InvalidDatasetError(
                f"{len(names)} channel names for {shape[0]} channels"
            )
        object.__setattr__(self, "_index", index)

    @property
    def n_stimuli(self) -> int:
        return len(self.stimulus_frequencies_hz)

    @property
    def n_channels(self) -> int:
        return self.trials[0].n_channels

    @property
    def n_samples(self) -> int:
        return self.trials[0].n_samples

    @property
    def blocks(self) -> list[int]:
        return sorted({t.block_index for t in self.trials})

    def trial(self, block: int, stimulus: int) -> Trial | None:
        return self._index.get((block, stimulus))

    def stimulus_trials(self, stimulus: int, blocks: Iterable[int] | None = None) -> list[Trial]:
        """Trials of one stimulus, ordered by block index."""
        keep = None if blocks is None else set(blocks)
        out = [
            t for t in self.trials
            if t.stimulus_index == stimulus and (keep is None or t.block_index in keep)
        ]
        return sorted(out, key=lambda t: t.block_index)

    def subset_blocks(self, blocks: Iterable[int]) -> "Dataset":
        keep = set(blocks)
        return self.with_trials(t for t in self.trials if t.block_index in keep)

    def with_trials(self, trials: Iterable[Trial], **changes) -> "Dataset":
        return replace(self, trials=tuple(trials), **changes)

    def map_trials(self, fn, **changes) -> "Dataset":
        return self.with_trials((fn(t) for t in self.trials), **changes)

    def same_as(self, other: "Dataset") -> bool:
        if (
            self.sampling_rate_hz != other.sampling_rate_hz
            or self.stimulus_frequencies_hz != other.stimulus_frequencies_hz
            or self.n_blocks != other.n_blocks
            or self.channel_names != other.channel_names
            or self.latency_s != other.latency_s
            or len(self.trials) != len(other.trials)
        ):
            return False
        return all(
            other.trial(t.block_index, t.stimulus_index) is not None
            and t.same_as(other.trial(t.block_index, t.stimulus_index))
            for t in self.trials
        )


def centralize(trial: Trial) -> Trial:
    """Remove each channel's mean."""
    x = trial.samples
    if x.size == 0:
        raise InvalidInputError("cannot centralize an empty trial")
    return trial.with_samples(x - x.mean(axis=1, keepdims=True))


def window(trial: Trial, latency_s: float, duration_s: float, fs: float) -> Trial:
    """Cut ``duration_s`` seconds starting ``latency_s`` seconds into the trial."""
    start = seconds_to_samples(latency_s, fs)
    length = seconds_to_samples(duration_s, fs)
    if start < 0 or length < 0:
        raise OutOfRangeError(f"negative window offsets (start={start}, length={length})")
    if start + length > trial.n_samples:
        raise OutOfRangeError(
            f"window [{start}, {start + length}) exceeds trial length {trial.n_samples}"
        )
    return trial.with_samples(trial.samples[:, start:start + length])


def select_channels(dataset: Dataset, names: Sequence[str]) -> Dataset:
    names = [str(n) for n in names]
    missing = [n for n in names if n not in dataset.channel_names]
    if missing:
        raise ChannelLookupError(missing, dataset.channel_names)
    idx = [dataset.channel_names.index(n) for n in names]
    return dataset.map_trials(lambda t: t.with_samples(t.samples[idx]), channel_names=tuple(names))


def prepare(dataset: Dataset, duration_s: float, latency_s: float | None = None,
            channels: Sequence[str] | None = None) -> Dataset:
    """Channel selection, windowing after the latency offset, then centralization."""
    if channels is not None:
        dataset = select_channels(dataset, channels)
    lat = dataset.latency_s if latency_s is None else latency_s
    fs = dataset.sampling_rate_hz
    return dataset.map_trials(lambda t: centralize(window(t, lat, duration_s, fs)))


def stack(trials: Sequence[Trial]) -> np.ndarray:
    """Trials as an array of shape (n_trials, n_channels, n_samples)."""
    return np.stack([t.samples for t in trials])
