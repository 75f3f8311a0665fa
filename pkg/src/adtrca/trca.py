"""Task-related component analysis: spatial filters that maximise inter-trial reproducibility."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, Trial
from .errors import InsufficientDataError, InvalidInputError
from .linalg import SymmetricPencil, gen_eig_max, matrix_corr, pearson


@dataclass(frozen=True, eq=False)
class TrcaModel:
    """Per-stimulus spatial filters and trial-mean templates.

    Attributes
    ----------
    filters : ndarray, shape (n_stimuli, n_channels)
        Row ``s`` is the unit-norm filter of stimulus ``s``.
    templates : ndarray, shape (n_stimuli, n_channels, n_samples)
        Mean of the (centralized) training trials of each stimulus.
    """

    filters: np.ndarray
    templates: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n_stimuli(self) -> int:
        return self.filters.shape[0]

    @property
    def n_channels(self) -> int:
        return self.filters.shape[1]

    @property
    def n_samples(self) -> int:
        return self.templates.shape[2]

    @property
    def ensemble(self) -> np.ndarray:
        """Filter bank with one column per stimulus, shape (n_channels, n_stimuli)."""
        return self.filters.T


def reproducibility_pencil(trials: np.ndarray) -> SymmetricPencil:
    """(A A^T, B B^T) for trials of shape (M, n_channels, n_samples).

    ``A`` is the trial mean and ``B`` the time-concatenation of all trials, so
    ``B B^T`` is the sum of the per-trial covariances.
    """
    mean = trials.mean(axis=0)
    num = mean @ mean.T
    den = np.einsum("mct,mdt->cd", trials, trials)
    return SymmetricPencil(0.5 * (num + num.T), 0.5 * (den + den.T))


def fit_spatial_filter(trials: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Principal reproducibility filter and the mean template of one stimulus."""
    _, w = gen_eig_max(reproducibility_pencil(trials))
    return w, trials.mean(axis=0)


def group_trials(train: Dataset, min_trials: int = 2) -> list[np.ndarray]:
    groups = []
    for s in range(train.n_stimuli):
        ts = train.stimulus_trials(s)
        if len(ts) < min_trials:
            raise InsufficientDataError(
                f"stimulus {s} has {len(ts)} training trial(s); at least {min_trials} required"
            )
        groups.append(np.stack([t.samples for t in ts]))
    return groups


def trca_fit(train: Dataset) -> TrcaModel:
    filters, templates = [], []
    for trials in group_trials(train):
        w, a = fit_spatial_filter(trials)
        filters.append(w)
        templates.append(a)
    meta = {
        "stimulus_frequencies_hz": list(train.stimulus_frequencies_hz),
        "channel_names": list(train.channel_names),
        "sampling_rate_hz": train.sampling_rate_hz,
    }
    return TrcaModel(np.array(filters), np.array(templates), meta)


def _test_samples(test, n_channels: int, n_samples: int) -> np.ndarray:
    x = test.samples if isinstance(test, Trial) else np.asarray(test, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != n_channels:
        raise InvalidInputError(f"test trial has shape {x.shape}; model expects {n_channels} channels")
    if x.shape[1] != n_samples:
        raise InvalidInputError(f"test trial has {x.shape[1]} samples; model expects {n_samples}")
    return x


def correlation_features(filters: np.ndarray, templates: np.ndarray, tests, ensemble: bool) -> np.ndarray:
    """Feature vector over stimuli.

    ``tests`` is either a single matrix used against every template or a
    sequence giving the (possibly class-filtered) test matrix for each stimulus.
    """
    n = filters.shape[0]
    feats = np.empty(n)
    for s in range(n):
        x = tests[s] if isinstance(tests, (list, tuple)) else tests
        if ensemble:
            w = filters.T
            feats[s] = matrix_corr(w.T @ x, w.T @ templates[s])
        else:
            w = filters[s]
            feats[s] = pearson(w @ x, w @ templates[s])
    return feats


def trca_classify(model: TrcaModel, test, ensemble: bool = False) -> tuple[int, np.ndarray]:
    x = _test_samples(test, model.n_channels, model.n_samples)
    feats = correlation_features(model.filters, model.templates, x, ensemble)
    return int(np.argmax(feats)), feats
