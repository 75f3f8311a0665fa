"""Training-free CCA frequency detection."""
from __future__ import annotations

import numpy as np

from .core import Trial
from .errors import InvalidInputError
from .linalg import SymmetricPencil, gen_eig_max
from .reference import ReferenceDictionary, ReferenceTemplate


def _samples(trial) -> np.ndarray:
    return trial.samples if isinstance(trial, Trial) else np.asarray(trial, dtype=np.float64)


def cca_rho(trial, template: ReferenceTemplate) -> float:
    """First canonical correlation between a trial and a reference template.

    Solved as the generalized problem
    ``X P X^T w = rho^2 X X^T w`` with ``P`` the projector onto the template's
    column space.
    """
    x = _samples(trial)
    y = template.matrix if isinstance(template, ReferenceTemplate) else np.asarray(template)
    if x.shape[1] != y.shape[0]:
        raise InvalidInputError(
            f"trial has {x.shape[1]} samples but template has {y.shape[0]}"
        )
    q, _ = np.linalg.qr(y)
    xq = x @ q
    num = xq @ xq.T
    den = x @ x.T
    lam, _ = gen_eig_max(SymmetricPencil(0.5 * (num + num.T), 0.5 * (den + den.T)))
    return float(np.sqrt(min(max(lam, 0.0), 1.0)))


def cca_features(trial, dictionary: ReferenceDictionary) -> np.ndarray:
    return np.array([cca_rho(trial, tpl) for tpl in dictionary.templates()])


def cca_classify(trial, dictionary: ReferenceDictionary) -> tuple[int, np.ndarray]:
    rho = cca_features(trial, dictionary)
    # np.argmax returns the first maximum, i.e. the lowest index on ties
    return int(np.argmax(rho)), rho
