"""Sine/cosine reference templates and the stacked harmonic dictionary."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AliasingError, InvalidInputError

DEFAULT_HARMONICS = 5


@dataclass(frozen=True, eq=False)
class ReferenceTemplate:
    """Columns ``[sin(2 pi f t), cos(2 pi f t), sin(4 pi f t), ...]``, shape (n_samples, 2 * n_harmonics)."""

    matrix: np.ndarray
    frequency_hz: float
    n_harmonics: int
    fs: float


@dataclass(frozen=True, eq=False)
class ReferenceDictionary:
    matrix: np.ndarray
    frequencies: tuple
    n_harmonics: int
    fs: float

    @property
    def n_samples(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_columns(self) -> int:
        return self.matrix.shape[1]

    def template(self, s: int) -> ReferenceTemplate:
        w = 2 * self.n_harmonics
        return ReferenceTemplate(
            self.matrix[:, s * w:(s + 1) * w], self.frequencies[s], self.n_harmonics, self.fs
        )

    def templates(self) -> list[ReferenceTemplate]:
        return [self.template(s) for s in range(len(self.frequencies))]


def _check_harmonics(f: float, n_harmonics: int, fs: float) -> None:
    if n_harmonics < 1:
        raise InvalidInputError(f"need at least one harmonic, got {n_harmonics}")
    if f <= 0 or fs <= 0:
        raise InvalidInputError("frequency and sampling rate must be positive")
    if f * n_harmonics >= fs / 2:
        raise AliasingError(
            f"harmonic {n_harmonics} of {f} Hz ({f * n_harmonics} Hz) is not below Nyquist ({fs / 2} Hz)"
        )


def build_template(f: float, n_harmonics: int, fs: float, n_samples: int) -> ReferenceTemplate:
    f, fs = float(f), float(fs)
    _check_harmonics(f, n_harmonics, fs)
    if n_samples < 2:
        raise InvalidInputError(f"need at least two samples, got {n_samples}")
    t = np.arange(n_samples) / fs
    cols = []
    for k in range(1, n_harmonics + 1):
        phase = 2 * np.pi * k * f * t
        cols.append(np.sin(phase))
        cols.append(np.cos(phase))
    m = np.column_stack(cols)
    m.setflags(write=False)
    return ReferenceTemplate(m, f, int(n_harmonics), fs)


def build_dictionary(frequencies: Sequence[float], n_harmonics: int, fs: float,
                     n_samples: int) -> ReferenceDictionary:
    freqs = tuple(float(f) for f in frequencies)
    if not freqs:
        raise InvalidInputError("no frequencies given")
    if len(set(freqs)) != len(freqs):
        raise InvalidInputError(f"duplicate frequencies in {list(freqs)}")
    blocks = [build_template(f, n_harmonics, fs, n_samples).matrix for f in freqs]
    m = np.hstack(blocks)
    m.setflags(write=False)
    return ReferenceDictionary(m, freqs, int(n_harmonics), float(fs))
