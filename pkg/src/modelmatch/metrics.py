"""Evaluation metrics: top-k accuracy, average rank, Frechet distance.

The Frechet distance is computed over externally supplied feature
matrices; no feature extraction happens here. Means use the sample mean,
covariances the unbiased (N-1) estimator:

    d^2 = ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2))

The trace of the matrix square root is evaluated through the symmetrized
product A S_b A with A = S_a^(1/2): it shares the (nonnegative) spectrum
of S_a S_b, so eigenvalues can be clamped at zero and square-rooted
without forming a non-symmetric root.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, DimensionMismatch, EmptyInput, InvalidK, NumericalFailure

_EPS = 1e-10


@dataclass(frozen=True)
class EvalReport:
    """Aggregate metrics for one (method, examples-per-requirement) cell."""

    method: str
    n_examples: int
    task_count: int
    topk_accuracy: dict[int, float]
    average_rank: float
    fid: float | None = None

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "n_examples": self.n_examples,
            "task_count": self.task_count,
            "topk_accuracy": {str(k): v for k, v in sorted(self.topk_accuracy.items())},
            "average_rank": self.average_rank,
            "fid": self.fid,
        }


def topk_accuracy(true_ranks, k: int) -> float:
    """Fraction of tasks whose true model ranked within the first k."""
    ranks = np.asarray(list(true_ranks))
    if ranks.size == 0:
        raise EmptyInput("no ranks supplied")
    if np.any(ranks < 1):
        raise InvalidK("ranks must be >= 1")
    if k < 1:
        raise InvalidK(f"k must be >= 1, got {k}")
    return float(np.mean(ranks <= k))


def average_rank(true_ranks) -> float:
    ranks = np.asarray(list(true_ranks))
    if ranks.size == 0:
        raise EmptyInput("no ranks supplied")
    return float(np.mean(ranks))


def _sym_sqrt(mat: np.ndarray) -> np.ndarray:
    """Square root of a symmetric PSD matrix via eigendecomposition,
    clamping small negative eigenvalues produced by rounding."""
    sym = (mat + mat.T) / 2.0
    try:
        vals, vecs = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigendecomposition failed: {exc}") from exc
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def product_trace_sqrt(sigma_a: np.ndarray, sigma_b: np.ndarray) -> float:
    """Tr((S_a S_b)^(1/2)) through the symmetrized product."""
    a_half = _sym_sqrt(sigma_a)
    inner = a_half @ sigma_b @ a_half
    sym = (inner + inner.T) / 2.0
    try:
        vals = np.linalg.eigvalsh(sym)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigendecomposition failed: {exc}") from exc
    return float(np.sum(np.sqrt(np.clip(vals, 0.0, None))))


def product_matrix_sqrt(sigma_a: np.ndarray, sigma_b: np.ndarray) -> np.ndarray:
    """Full matrix square root of S_a S_b (for validation by squaring).

    Uses (S_a S_b)^(1/2) = A (A S_b A)^(1/2) A^(-1) with A = S_a^(1/2);
    intended for well-conditioned inputs, pseudo-inverting A when needed.
    """
    a_half = _sym_sqrt(sigma_a)
    inner_sqrt = _sym_sqrt(a_half @ sigma_b @ a_half)
    return a_half @ inner_sqrt @ np.linalg.pinv(a_half)


def frechet_distance(features_a: np.ndarray, features_b: np.ndarray) -> float:
    """Frechet distance between Gaussians fit to two feature sets."""
    a = np.asarray(features_a, dtype=np.float64)
    b = np.asarray(features_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise DegenerateInput("feature sets must be 2-D matrices")
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise DegenerateInput("need at least 2 samples per feature set")
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"feature dims differ: {a.shape[1]} != {b.shape[1]}")
    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    sigma_a = np.cov(a, rowvar=False)
    sigma_b = np.cov(b, rowvar=False)
    sigma_a = np.atleast_2d(sigma_a)
    sigma_b = np.atleast_2d(sigma_b)
    # near-singular products benefit from a tiny diagonal offset
    offset = _EPS * np.eye(sigma_a.shape[0])
    diff = mu_a - mu_b
    trace_term = float(np.trace(sigma_a) + np.trace(sigma_b)) - 2.0 * product_trace_sqrt(
        sigma_a + offset, sigma_b + offset
    )
    value = float(diff @ diff) + trace_term
    if not np.isfinite(value):
        raise NumericalFailure("Frechet distance diverged")
    return max(value, 0.0)
