"""Adaptive TRCA: TRCA on trials passed through a per-stimulus learned temporal filter.

For each stimulus an ARD fit over the harmonic dictionary yields a filter
``F_s`` on the time axis. Training trials are filtered (``X F_s``), the
reproducibility filter is trained on the filtered trials, and at test time
the test trial is filtered with the candidate class's ``F_s`` before being
correlated against that class's filtered template. With ``F_s = I`` this is
exactly TRCA.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .ard import ArdConfig, ard_fit, build_problem, temporal_filter
from .core import Dataset, Trial
from .errors import InvalidInputError, SsvepError
from .reference import ReferenceDictionary
from .trca import _test_samples, correlation_features, fit_spatial_filter, group_trials

TEST_FILTER_MODES = ("class", "shared")


@dataclass(frozen=True, eq=False)
class AdTrcaModel:
    """Fitted adaptive TRCA model.

    Attributes
    ----------
    temporal_filters : ndarray, shape (n_stimuli, n_samples, n_samples)
    filters : ndarray, shape (n_stimuli, n_channels)
    templates : ndarray, shape (n_stimuli, n_channels, n_samples)
        Means of the filtered training trials.
    meta : dict
        Configuration snapshot and per-stimulus ARD diagnostics.
    """

    temporal_filters: np.ndarray
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
        return self.filters.T

    @property
    def identity(self) -> bool:
        return bool(self.meta.get("identity_filter", False))

    @property
    def test_filter(self) -> str:
        return self.meta.get("test_filter", "class")


def adtrca_fit(train: Dataset, dictionary: ReferenceDictionary, ard_config: ArdConfig = ArdConfig(),
               identity_filter: bool = False, test_filter: str = "class") -> AdTrcaModel:
    """Fit per-stimulus temporal filters, then spatial filters on the filtered trials.

    ``identity_filter`` skips the ARD fit and uses ``F_s = I``, which reduces
    the model to TRCA; it exists for debugging and equivalence checks.
    """
    if test_filter not in TEST_FILTER_MODES:
        raise InvalidInputError(f"test_filter must be one of {TEST_FILTER_MODES}, got {test_filter!r}")
    if dictionary.n_samples != train.n_samples:
        raise InvalidInputError(
            f"dictionary has {dictionary.n_samples} rows; trials have {train.n_samples} samples"
        )
    n_t = train.n_samples
    temporal, filters, templates, diag = [], [], [], []
    for s, trials in enumerate(group_trials(train)):
        if identity_filter:
            f = np.eye(n_t)
            filtered = trials
            diag.append({})
        else:
            try:
                model = ard_fit(build_problem(list(trials), dictionary), ard_config)
            except SsvepError as exc:
                raise type(exc)(f"ARD fit failed for stimulus {s}: {exc}") from exc
            f = temporal_filter(model, dictionary).F
            filtered = trials @ f
            diag.append({
                "a0": model.a0,
                "n_active": int(np.count_nonzero(model.active)),
                "n_iters": model.n_iters,
                "converged": model.converged,
            })
        w, a = fit_spatial_filter(filtered)
        temporal.append(f)
        filters.append(w)
        templates.append(a)
    meta = {
        "stimulus_frequencies_hz": list(train.stimulus_frequencies_hz),
        "channel_names": list(train.channel_names),
        "sampling_rate_hz": train.sampling_rate_hz,
        "n_harmonics": dictionary.n_harmonics,
        "ard": asdict(ard_config),
        "identity_filter": bool(identity_filter),
        "test_filter": test_filter,
        "ard_fits": diag,
    }
    return AdTrcaModel(np.array(temporal), np.array(filters), np.array(templates), meta)


def filtered_tests(model: AdTrcaModel, x: np.ndarray):
    """The test trial as seen by each class: a list per class, or one shared matrix."""
    if model.identity:
        return x
    if model.test_filter == "shared":
        return x @ model.temporal_filters.mean(axis=0)
    return [x @ f for f in model.temporal_filters]


def adtrca_classify(model: AdTrcaModel, test, ensemble: bool = False) -> tuple[int, np.ndarray]:
    x = _test_samples(test, model.n_channels, model.n_samples)
    feats = correlation_features(model.filters, model.templates, filtered_tests(model, x), ensemble)
    return int(np.argmax(feats)), feats
