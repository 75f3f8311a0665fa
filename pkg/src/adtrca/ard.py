"""Multitask sparse Bayesian regression with shared ARD precisions.

Every channel of every training trial of one stimulus is a regression task
``y_i = Phi w_i + e_i`` over the same harmonic dictionary ``Phi``. The tasks
share the per-coefficient prior precisions ``a`` and the noise precision
``a0``; both are learned by type-II maximum likelihood with the fixed-point
updates, iterated to convergence. The posterior covariance does not depend on
the task, so it is computed once per fit.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .core import Trial
from .errors import InvalidInputError, NumericalFailureError
from .reference import ReferenceDictionary

log = logging.getLogger(__name__)

EVIDENCE_SLACK = 1e-6


@dataclass(frozen=True)
class ArdConfig:
    max_iters: int = 300
    tol: float = 1e-3
    a_init: float = 1.0
    a0_init: float | None = None  # None: 10 / variance of the stacked targets
    prune_threshold: float = 1e8
    a0_max_ratio: float = 1e10  # cap on a0 * variance of the stacked targets

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be >= 1")
        if self.tol <= 0 or self.a_init <= 0 or self.prune_threshold <= 0:
            raise InvalidInputError("tol, a_init and prune_threshold must be positive")
        if self.a0_init is not None and self.a0_init <= 0:
            raise InvalidInputError("a0_init must be positive")


@dataclass(frozen=True, eq=False)
class MtlProblem:
    """Shared dictionary ``phi`` (n_samples, P) and task targets (n_samples, L)."""

    phi: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=np.float64)
        y = np.asarray(self.targets, dtype=np.float64)
        if y.ndim == 1:
            y = y[:, None]
        if phi.ndim != 2 or y.ndim != 2 or phi.shape[0] != y.shape[0]:
            raise InvalidInputError(f"dictionary {phi.shape} and targets {y.shape} do not conform")
        if y.shape[1] < 1:
            raise InvalidInputError("need at least one task")
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(y))):
            raise InvalidInputError("dictionary and targets must be finite")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "targets", y)

    @property
    def n_samples(self) -> int:
        return self.phi.shape[0]

    @property
    def n_basis(self) -> int:
        return self.phi.shape[1]

    @property
    def n_tasks(self) -> int:
        return self.targets.shape[1]


@dataclass(frozen=True, eq=False)
class ArdModel:
    a: np.ndarray
    a0: float
    sigma: np.ndarray
    mu: np.ndarray
    pruned: np.ndarray
    evidence_trace: tuple = ()
    n_iters: int = 0
    converged: bool = False

    @property
    def active(self) -> np.ndarray:
        return ~self.pruned

    def support(self, rel: float = 0.1) -> np.ndarray:
        """Indices whose coefficient norm (over tasks) is at least ``rel`` times the largest.

        Weak components can sit at a finite evidence optimum without being
        pruned; this separates them from the relevant ones.
        """
        norms = np.linalg.norm(self.mu, axis=1)
        top = norms.max() if norms.size else 0.0
        if top == 0.0:
            return np.array([], dtype=int)
        return np.flatnonzero(norms >= rel * top)


@dataclass(frozen=True, eq=False)
class TemporalFilter:
    """``F = a0 Phi Sigma Phi^T`` acting on the time axis, and ``C = F F^T``."""

    F: np.ndarray
    C: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.C is None:
            object.__setattr__(self, "C", self.F @ self.F.T)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Filter every row (channel) of ``x``."""
        return x @ self.F


def identity_filter(n_samples: int) -> TemporalFilter:
    eye = np.eye(n_samples)
    return TemporalFilter(eye, eye)


def build_problem(trials: Sequence[Trial], dictionary: ReferenceDictionary) -> MtlProblem:
    """Stack the channels of the trials as tasks: column ``m * n_channels + ch``."""
    if len(trials) < 1:
        raise InvalidInputError("need at least one trial")
    cols = []
    for t in trials:
        x = t.samples if isinstance(t, Trial) else np.asarray(t, dtype=np.float64)
        if x.shape[1] != dictionary.n_samples:
            raise InvalidInputError(
                f"trial has {x.shape[1]} samples; dictionary has {dictionary.n_samples} rows"
            )
        cols.append(x.T)
    return MtlProblem(dictionary.matrix, np.hstack(cols))


def _posterior(phtph, phty, a, a0, iteration):
    """Cholesky factor of ``a0 Phi^T Phi + diag(a)``, its inverse, and the posterior means."""
    h = a0 * phtph + np.diag(a)
    try:
        cho = sla.cho_factor(h, lower=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailureError(f"posterior precision not positive definite at iteration {iteration}") from exc
    sigma = sla.cho_solve(cho, np.eye(len(a)))
    sigma = 0.5 * (sigma + sigma.T)
    mu = a0 * (sigma @ phty)
    return cho, sigma, mu


def _evidence(cho, a, a0, mu, rss_total, yy_total, n_samples, n_tasks):
    # log|C| = -N log a0 - sum log a - log|Sigma|,  log|Sigma| = -log|H|
    if len(a) == 0:
        return -0.5 * (n_tasks * (n_samples * np.log(2 * np.pi) - n_samples * np.log(a0)) + a0 * yy_total)
    logdet_h = 2.0 * np.sum(np.log(np.diag(cho[0])))
    logdet_c = -n_samples * np.log(a0) - np.sum(np.log(a)) + logdet_h
    quad = a0 * rss_total + float(np.sum(a[:, None] * mu ** 2))
    return -0.5 * (n_tasks * (n_samples * np.log(2 * np.pi) + logdet_c) + quad)


def ard_fit(problem: MtlProblem, config: ArdConfig = ArdConfig()) -> ArdModel:
    phi, y = problem.phi, problem.targets
    n, p = phi.shape
    n_tasks = y.shape[1]

    yy = float(np.sum(y * y))
    var = float(np.var(y))
    pruned = np.zeros(p, dtype=bool)
    if yy == 0.0:
        a = np.full(p, config.prune_threshold)
        a0 = config.a0_init if config.a0_init is not None else 1.0
        ev = -0.5 * n_tasks * (n * np.log(2 * np.pi) - n * np.log(a0))
        return ArdModel(
            a=a, a0=float(a0), sigma=np.diag(1.0 / a), mu=np.zeros((p, n_tasks)),
            pruned=np.ones(p, dtype=bool), evidence_trace=(float(ev),), n_iters=0, converged=True,
        )

    a0_max = config.a0_max_ratio / var
    a0 = config.a0_init if config.a0_init is not None else 10.0 / var
    a0 = min(float(a0), a0_max)
    a = np.full(p, float(config.a_init))

    phtph = phi.T @ phi
    phty = phi.T @ y
    a_floor = 1e-12 * float(np.trace(phtph)) / max(p, 1)

    trace = []
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        act = ~pruned
        ia = np.flatnonzero(act)
        if ia.size == 0:
            converged = True
            break
        cho, sigma, mu = _posterior(phtph[np.ix_(ia, ia)], phty[ia], a[ia], a0, it)
        resid = y - phi[:, ia] @ mu
        rss = float(np.sum(resid * resid))
        ev = _evidence(cho, a[ia], a0, mu, rss, yy, n, n_tasks)
        if trace and ev < trace[-1] - EVIDENCE_SLACK:
            log.warning("evidence decreased at iteration %d: %.9g -> %.9g", it, trace[-1], ev)
        trace.append(float(ev))

        gamma = np.clip(1.0 - a[ia] * np.diag(sigma), 0.0, 1.0)
        musq = np.sum(mu * mu, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            a_new = n_tasks * gamma / musq
        drop = ~np.isfinite(a_new) | (a_new > config.prune_threshold)
        a_new = np.where(drop, config.prune_threshold, np.maximum(a_new, a_floor))

        num = n_tasks * (n - float(np.sum(gamma)))
        a0_new = a0_max if (num <= 0.0 or rss <= 0.0) else min(num / rss, a0_max)
        if not (np.isfinite(a0_new) and a0_new > 0 and np.all(np.isfinite(a_new))):
            raise NumericalFailureError(f"hyperparameter update diverged at iteration {it}")

        keep = ~drop
        rel = np.max(np.abs(a_new[keep] - a[ia][keep]) / a[ia][keep]) if keep.any() else 0.0
        a[ia] = a_new
        pruned[ia[drop]] = True
        a0 = float(a0_new)
        if not drop.any() and rel < config.tol:
            converged = True
            break

    # final posterior consistent with the returned hyperparameters
    ia = np.flatnonzero(~pruned)
    mu_full = np.zeros((p, n_tasks))
    sigma_full = np.diag(1.0 / a)
    if ia.size:
        cho, sigma, mu = _posterior(phtph[np.ix_(ia, ia)], phty[ia], a[ia], a0, it + 1)
        mu_full[ia] = mu
        sigma_full[np.ix_(ia, ia)] = sigma
        resid = y - phi[:, ia] @ mu
        ev = _evidence(cho, a[ia], a0, mu, float(np.sum(resid * resid)), yy, n, n_tasks)
    else:
        ev = _evidence(None, a[ia], a0, None, yy, yy, n, n_tasks)
    trace.append(float(ev))
    if not converged:
        log.info("ARD stopped at max_iters=%d without meeting tol=%g", config.max_iters, config.tol)
    return ArdModel(
        a=a, a0=a0, sigma=sigma_full, mu=mu_full, pruned=pruned.copy(),
        evidence_trace=tuple(trace), n_iters=it, converged=converged,
    )


def marginal_log_likelihood(a, a0: float, problem: MtlProblem, pruned=None) -> float:
    """Log evidence summed over tasks, from a Cholesky factor of the dense marginal covariance.

    ``C = a0^-1 I + Phi A^-1 Phi^T``; pruned components have zero prior variance.
    """
    a = np.asarray(a, dtype=np.float64)
    if a0 <= 0 or np.any(a <= 0):
        raise InvalidInputError("precisions must be positive")
    phi, y = problem.phi, problem.targets
    n = phi.shape[0]
    inv_a = 1.0 / a
    if pruned is not None:
        inv_a = np.where(np.asarray(pruned, dtype=bool), 0.0, inv_a)
    c = np.eye(n) / a0 + (phi * inv_a) @ phi.T
    try:
        low = np.linalg.cholesky(0.5 * (c + c.T))
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError("marginal covariance is not positive definite") from exc
    logdet = 2.0 * np.sum(np.log(np.diag(low)))
    z = sla.solve_triangular(low, y, lower=True)
    quad = float(np.sum(z * z))
    return float(-0.5 * (y.shape[1] * (n * np.log(2 * np.pi) + logdet) + quad))


def temporal_filter(model: ArdModel, dictionary: ReferenceDictionary) -> TemporalFilter:
    ia = np.flatnonzero(model.active)
    phi = dictionary.matrix[:, ia]
    f = model.a0 * (phi @ model.sigma[np.ix_(ia, ia)] @ phi.T)
    f = 0.5 * (f + f.T)
    return TemporalFilter(f)


def evidence_csv(model: ArdModel) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "log_evidence"])
    for i, v in enumerate(model.evidence_trace):
        w.writerow([i, repr(v)])
    return buf.getvalue()
