"""RBF kernel and empirical kernel mean embedding (KME) arithmetic.

A weighted point set {(p_i, w_i)} embeds into the kernel's RKHS as
sum_i w_i * k(p_i, .). Inner products and squared distances between two
such embeddings expand into pairwise kernel sums:

    <a, b>   = sum_i sum_j a.w_i * b.w_j * k(a.p_i, b.p_j)
    ||a-b||^2 = <a,a> - 2<a,b> + <b,b>

Everything computes in float64 with numpy's pairwise summation, so results
are reproducible run to run and independent of caller-side parallelism.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidConfig, MismatchedLengths, NonFiniteValue
from .types import COMPUTE_DTYPE, check_embedding_matrix

logger = logging.getLogger(__name__)

#: Default RBF bandwidth used across the package.
DEFAULT_GAMMA = 0.02

_clamp_events = 0


def clamp_event_count() -> int:
    """Number of times a squared distance was clamped up to zero."""
    return _clamp_events


def reset_clamp_events() -> None:
    global _clamp_events
    _clamp_events = 0


@dataclass(frozen=True)
class KernelConfig:
    gamma: float = DEFAULT_GAMMA

    def __post_init__(self):
        if not self.gamma > 0:
            raise InvalidConfig(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class WeightedKmePoints:
    """Finite weighted point mixture representing an empirical KME."""

    points: np.ndarray  # (n, dim)
    weights: np.ndarray  # (n,)

    @classmethod
    def build(cls, points, weights=None) -> "WeightedKmePoints":
        pts = check_embedding_matrix(points, name="points")
        if weights is None:
            w = np.full(pts.shape[0], 1.0 / pts.shape[0], dtype=COMPUTE_DTYPE)
        else:
            w = np.asarray(weights, dtype=COMPUTE_DTYPE).reshape(-1)
        if w.shape[0] != pts.shape[0]:
            raise MismatchedLengths(
                f"points/weights lengths differ: {pts.shape[0]} != {w.shape[0]}"
            )
        if not np.all(np.isfinite(w)):
            raise NonFiniteValue("weights contain NaN or Inf")
        w = w.copy()
        w.setflags(write=False)
        return cls(points=pts, weights=w)

    @classmethod
    def uniform(cls, points) -> "WeightedKmePoints":
        return cls.build(points, None)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]


def pairwise_sq_dists(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``D[i, j] = ||x_i - y_j||^2`` in float64, clipped at 0."""
    xw = np.asarray(x, dtype=COMPUTE_DTYPE)
    yw = np.asarray(y, dtype=COMPUTE_DTYPE)
    if xw.ndim == 1:
        xw = xw.reshape(1, -1)
    if yw.ndim == 1:
        yw = yw.reshape(1, -1)
    if xw.shape[1] != yw.shape[1]:
        raise DimensionMismatch(f"dims differ: {xw.shape[1]} != {yw.shape[1]}")
    x_sq = np.sum(xw * xw, axis=1, keepdims=True)
    y_sq = np.sum(yw * yw, axis=1, keepdims=True).T
    d = x_sq + y_sq - 2.0 * (xw @ yw.T)
    # rounding can push exact zeros slightly negative
    return np.maximum(d, 0.0)


def rbf_kernel_matrix(x: np.ndarray, y: np.ndarray, cfg: KernelConfig) -> np.ndarray:
    """``K[i, j] = exp(-gamma * ||x_i - y_j||^2)``; entries in (0, 1]."""
    return np.exp(-cfg.gamma * pairwise_sq_dists(x, y))


def rbf_kernel(x, y, cfg: KernelConfig) -> float:
    """Scalar RBF kernel between two embeddings."""
    xv = np.asarray(x, dtype=COMPUTE_DTYPE).reshape(-1)
    yv = np.asarray(y, dtype=COMPUTE_DTYPE).reshape(-1)
    if xv.shape[0] != yv.shape[0]:
        raise DimensionMismatch(f"dims differ: {xv.shape[0]} != {yv.shape[0]}")
    diff = xv - yv
    return float(np.exp(-cfg.gamma * np.dot(diff, diff)))


def kme_inner(a: WeightedKmePoints, b: WeightedKmePoints, cfg: KernelConfig) -> float:
    """RKHS inner product of two weighted empirical KMEs: w_a' K w_b."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"dims differ: {a.dim} != {b.dim}")
    k = rbf_kernel_matrix(a.points, b.points, cfg)
    return float(a.weights @ k @ b.weights)


def kme_sq_distance(a: WeightedKmePoints, b: WeightedKmePoints, cfg: KernelConfig) -> float:
    """Squared RKHS distance ``<a,a> - 2<a,b> + <b,b>``, clamped at zero."""
    value = kme_inner(a, a, cfg) - 2.0 * kme_inner(a, b, cfg) + kme_inner(b, b, cfg)
    return _clamp_nonnegative(value)


def _clamp_nonnegative(value: float) -> float:
    """Round-off guard: squared distances are mathematically >= 0."""
    global _clamp_events
    if value < 0.0:
        _clamp_events += 1
        logger.debug("clamped negative squared distance %.3e to 0", value)
        return 0.0
    return value
