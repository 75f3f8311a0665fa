"""Synthetic SSVEP datasets with controllable SNR and structured noise."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, Trial, seconds_to_samples
from .errors import ConfigurationError

EPOC_FREQUENCIES = (6.66, 7.5, 8.57, 10.0, 12.0)
NOISE_KINDS = ("none", "shared-profile", "pink")


@dataclass(frozen=True)
class SynthConfig:
    frequencies: tuple = EPOC_FREQUENCIES
    fs: float = 128.0
    n_channels: int = 2
    n_blocks: int = 4
    tw: float = 1.0
    n_harmonics_signal: int = 3
    snr_db: float = 0.0
    structured_noise: str = "none"
    mixing_seed: int = 0
    noise_seed: int = 0
    latency_s: float = 0.0
    phase_jitter: float = np.pi / 8
    structured_fraction: float = 0.9
    profile_band_hz: tuple = (0.5, 5.0)
    channel_names: tuple | None = None

    def validate(self) -> None:
        if not self.frequencies or any(f <= 0 for f in self.frequencies):
            raise ConfigurationError("frequencies must be positive")
        if len(set(self.frequencies)) != len(self.frequencies):
            raise ConfigurationError("frequencies must be distinct")
        if self.fs <= 0:
            raise ConfigurationError("fs must be positive")
        if self.n_harmonics_signal < 1:
            raise ConfigurationError("n_harmonics_signal must be >= 1")
        if max(self.frequencies) * self.n_harmonics_signal >= self.fs / 2:
            raise ConfigurationError("signal harmonics must lie below Nyquist")
        if self.n_channels < 1 or self.n_blocks < 1:
            raise ConfigurationError("n_channels and n_blocks must be >= 1")
        if self.tw <= 0 or self.latency_s < 0:
            raise ConfigurationError("tw must be positive and latency_s non-negative")
        if seconds_to_samples(self.tw, self.fs) < 2:
            raise ConfigurationError("tw too short for fs")
        if not np.isfinite(self.snr_db):
            raise ConfigurationError("snr_db must be finite")
        if self.structured_noise not in NOISE_KINDS:
            raise ConfigurationError(f"structured_noise must be one of {NOISE_KINDS}")
        if not 0.0 <= self.structured_fraction <= 1.0:
            raise ConfigurationError("structured_fraction must lie in [0, 1]")
        lo, hi = self.profile_band_hz
        if not 0 < lo < hi < self.fs / 2:
            raise ConfigurationError("profile_band_hz must be an increasing band below Nyquist")
        if self.channel_names is not None and len(self.channel_names) != self.n_channels:
            raise ConfigurationError("channel_names length must equal n_channels")

    @property
    def n_samples(self) -> int:
        return seconds_to_samples(self.latency_s + self.tw, self.fs)


def _mixing_matrix(rng: np.random.Generator, n: int) -> np.ndarray:
    while True:
        m = rng.standard_normal((n, n))
        if np.linalg.cond(m) < 50:
            return m


def pink_noise(rng: np.random.Generator, shape: tuple) -> np.ndarray:
    """1/f noise along the last axis, each row scaled to unit variance."""
    n = shape[-1]
    spec = rng.standard_normal(shape[:-1] + (n // 2 + 1,)) + 1j * rng.standard_normal(shape[:-1] + (n // 2 + 1,))
    k = np.arange(n // 2 + 1, dtype=np.float64)
    k[0] = 1.0
    spec = spec / np.sqrt(k)
    spec[..., 0] = 0.0
    x = np.fft.irfft(spec, n=n, axis=-1)
    return x / x.std(axis=-1, keepdims=True)


def _band_profile(rng: np.random.Generator, n: int, fs: float, band: tuple) -> np.ndarray:
    """Unit-power sum of random sinusoids inside ``band``."""
    t = np.arange(n) / fs
    freqs = rng.uniform(band[0], band[1], size=4)
    phases = rng.uniform(0, 2 * np.pi, size=4)
    amps = rng.uniform(0.5, 1.0, size=4)
    p = (amps[:, None] * np.sin(2 * np.pi * freqs[:, None] * t + phases[:, None])).sum(axis=0)
    p = p - p.mean()
    return p / np.sqrt(np.mean(p * p))


def generate(config: SynthConfig) -> Dataset:
    """Build a dataset of ``n_blocks`` complete blocks.

    Each trial is ``m_0 s(t) + noise`` where ``s`` sums the class frequency's
    harmonics with 1/k amplitudes and a phase that is fixed per class up to a
    random per-block jitter, and ``m_0`` is the first column of a seeded
    full-rank mixing matrix. Samples are rounded to float32 values so the
    dataset round-trips through the binary format exactly.
    """
    config.validate()
    fs, n_ch = config.fs, config.n_channels
    n = config.n_samples
    t = np.arange(n) / fs - config.latency_s
    n_s = len(config.frequencies)

    mix = _mixing_matrix(np.random.default_rng(config.mixing_seed), n_ch)
    noise_ss = np.random.SeedSequence(config.noise_seed)
    phase_rng, white_rng, struct_rng = (np.random.default_rng(s) for s in noise_ss.spawn(3))

    base_phase = 0.5 * np.pi * np.arange(n_s)
    jitter = phase_rng.uniform(-config.phase_jitter, config.phase_jitter, size=config.n_blocks)
    ks = np.arange(1, config.n_harmonics_signal + 1)

    sources = np.empty((config.n_blocks, n_s, n))
    for b in range(config.n_blocks):
        for s, f in enumerate(config.frequencies):
            ph = ks[:, None] * (2 * np.pi * f * t[None, :] + base_phase[s] + jitter[b])
            sources[b, s] = (np.sin(ph) / ks[:, None]).sum(axis=0)
    signal = mix[:, 0][None, None, :, None] * sources[:, :, None, :]

    p_signal = float(np.mean(signal ** 2))
    p_noise = p_signal / 10 ** (config.snr_db / 10)
    mix_power = float(np.sum(mix * mix)) / n_ch  # per-channel power of M z for unit-variance z

    kind = config.structured_noise
    frac = config.structured_fraction if kind != "none" else 0.0
    white = white_rng.standard_normal((config.n_blocks, n_s, n_ch, n))
    noise = np.sqrt((1 - frac) * p_noise / mix_power) * np.einsum("cd,bsdt->bsct", mix, white)
    if kind == "pink":
        z = pink_noise(struct_rng, (config.n_blocks, n_s, n_ch, n))
        noise += np.sqrt(frac * p_noise / mix_power) * np.einsum("cd,bsdt->bsct", mix, z)
    elif kind == "shared-profile":
        profile = _band_profile(struct_rng, n, fs, config.profile_band_hz)
        pattern = mix[:, 1] if n_ch > 1 else mix[:, 0]
        scale = np.sqrt(frac * p_noise * n_ch / float(pattern @ pattern))
        noise += scale * pattern[None, None, :, None] * profile[None, None, None, :]

    data = (signal + noise).astype(np.float32).astype(np.float64)
    names = config.channel_names or tuple(f"Ch{i + 1}" for i in range(n_ch))
    trials = [
        Trial(data[b, s], s, b) for b in range(config.n_blocks) for s in range(n_s)
    ]
    return Dataset(trials, fs, config.frequencies, config.n_blocks, names, config.latency_s)


def shuffle_labels(dataset: Dataset, seed: int = 0) -> Dataset:
    """Permute stimulus labels within each block (keeps every block complete)."""
    rng = np.random.default_rng(seed)
    out = []
    for b in dataset.blocks:
        ts = [dataset.trial(b, s) for s in range(dataset.n_stimuli)]
        ts = [t for t in ts if t is not None]
        perm = rng.permutation(len(ts))
        out.extend(Trial(t.samples, ts[j].stimulus_index, b) for t, j in zip(ts, perm))
    return dataset.with_trials(out)
