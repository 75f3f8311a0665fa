"""Dense kernels: Cholesky, symmetric eigensolvers and correlation measures."""
from __future__ import annotations

import contextlib
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (
    DecompositionError,
    DegenerateDenominatorError,
    InvalidInputError,
    UndefinedCorrelationError,
)

RIDGE = 1e-10
SYMMETRY_RTOL = 1e-10
RESIDUAL_RTOL = 1e-8

# When enabled every gen_eig_max call verifies its own residual. Tests turn
# this on globally; library callers can use ``residual_checks()``.
_check_residuals = False
_solve_log: list | None = None


@contextlib.contextmanager
def residual_checks(log: list | None = None):
    """Verify the residual of every generalized solve inside the block.

    If ``log`` is given, each solve appends its relative residual to it.
    """
    global _check_residuals, _solve_log
    prev = _check_residuals, _solve_log
    _check_residuals, _solve_log = True, log
    try:
        yield
    finally:
        _check_residuals, _solve_log = prev


def set_residual_checks(enabled: bool) -> None:
    global _check_residuals
    _check_residuals = bool(enabled)


@dataclass(frozen=True, eq=False)
class SymmetricPencil:
    """The pair (S, Q) of ``S w = lambda Q w``."""

    numerator: np.ndarray
    denominator: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.numerator, dtype=np.float64)
        q = np.asarray(self.denominator, dtype=np.float64)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape != q.shape:
            raise InvalidInputError(f"pencil needs two equal square matrices, got {s.shape} and {q.shape}")
        _require_symmetric(s, "numerator")
        _require_symmetric(q, "denominator")
        object.__setattr__(self, "numerator", s)
        object.__setattr__(self, "denominator", q)

    @property
    def n(self) -> int:
        return self.numerator.shape[0]

    def scaled(self, c: float) -> "SymmetricPencil":
        return SymmetricPencil(c * self.numerator, c * self.denominator)


def _require_finite(m: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(m)):
        raise InvalidInputError(f"{what} has non-finite entries")


def _require_symmetric(m: np.ndarray, what: str) -> None:
    _require_finite(m, what)
    scale = np.linalg.norm(m)
    if scale > 0 and np.linalg.norm(m - m.T) > SYMMETRY_RTOL * scale:
        raise InvalidInputError(f"{what} is not symmetric")


def sign_normalize(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so its largest-magnitude entry is positive."""
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def cholesky(m) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == m``."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"cholesky needs a square matrix, got shape {m.shape}")
    _require_symmetric(m, "matrix")
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError("matrix is not positive definite") from exc


def sym_eig(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and orthonormal eigenvectors as columns."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"sym_eig needs a square matrix, got shape {m.shape}")
    _require_symmetric(m, "matrix")
    vals, vecs = np.linalg.eigh(m)
    vals, vecs = vals[::-1], vecs[:, ::-1]
    vecs = np.column_stack([sign_normalize(v) for v in vecs.T]) if vecs.size else vecs
    return vals, vecs


def ridge_denominator(q: np.ndarray, eps: float = RIDGE) -> np.ndarray:
    n = q.shape[0]
    tr = float(np.trace(q))
    if tr <= 0.0:
        raise DegenerateDenominatorError(f"denominator trace is {tr}; nothing to whiten")
    return q + (eps * tr / n) * np.eye(n)


def gen_eig_max(pencil: SymmetricPencil, eps: float = RIDGE) -> tuple[float, np.ndarray]:
    """Principal pair of ``S w = lambda Q w`` by Cholesky whitening of the ridged ``Q``.

    Returns the eigenvalue and a unit-norm ``w`` whose largest-magnitude entry
    is positive.
    """
    s = pencil.numerator
    q_r = ridge_denominator(pencil.denominator, eps)
    lower = cholesky(q_r)
    # L^-1 S L^-T
    tmp = sla.solve_triangular(lower, s, lower=True)
    white = sla.solve_triangular(lower, tmp.T, lower=True)
    white = 0.5 * (white + white.T)
    vals, vecs = np.linalg.eigh(white)
    lam = float(vals[-1])
    w = sla.solve_triangular(lower.T, vecs[:, -1], lower=False)
    w = sign_normalize(w / np.linalg.norm(w))

    if _check_residuals:
        rel = generalized_residual(s, q_r, lam, w)
        if _solve_log is not None:
            _solve_log.append(rel)
        if rel > RESIDUAL_RTOL:
            raise DecompositionError(f"generalized eigen residual {rel:.3e} exceeds {RESIDUAL_RTOL:g}")
    return lam, w


def generalized_residual(s: np.ndarray, q: np.ndarray, lam: float, w: np.ndarray) -> float:
    """``||S w - lam Q w|| / ||S w||`` (0 when ``S w`` vanishes together with the residual)."""
    sw = s @ w
    r = np.linalg.norm(sw - lam * (q @ w))
    den = np.linalg.norm(sw)
    if den == 0.0:
        return 0.0 if r == 0.0 else np.inf
    return float(r / den)


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise InvalidInputError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise InvalidInputError("pearson needs at least two samples")
    xc = x - x.mean()
    yc = y - y.mean()
    nx = np.linalg.norm(xc)
    ny = np.linalg.norm(yc)
    if nx <= 1e-14 * np.linalg.norm(x) or ny <= 1e-14 * np.linalg.norm(y):
        raise UndefinedCorrelationError("correlation undefined for a zero-variance input")
    r = float(xc @ yc / (nx * ny))
    return min(1.0, max(-1.0, r))


def matrix_corr(x, y) -> float:
    """2-D correlation coefficient: Pearson correlation of the row-major flattened matrices."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise InvalidInputError(f"shape mismatch: {x.shape} vs {y.shape}")
    return pearson(x.ravel(order="C"), y.ravel(order="C"))
