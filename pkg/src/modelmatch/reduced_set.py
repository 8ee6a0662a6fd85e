"""Reduced-set approximation of an empirical kernel mean embedding.

Finds a small weighted point set (C, w) minimizing

    J(C, w) = || sum_r w_r k(c_r, .) - (1/N) sum_n k(x_n, .) ||^2

by alternating a closed-form weight solve (the size x size linear system
K_rr w = K_rn 1/N, ridge-regularized because duplicate centers make K_rr
singular) with backtracking gradient steps on the centers. Deterministic
for a fixed seed; every accepted move weakly decreases J, so the final
error never exceeds the initialization error.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyInput, InvalidInput
from .kernels import KernelConfig, WeightedKmePoints, rbf_kernel_matrix
from .types import COMPUTE_DTYPE, check_embedding_matrix

_RIDGE = 1e-10
_MAX_ITERS = 200
_REL_TOL = 1e-8
_MAX_BACKTRACKS = 40


def build_reduced_set(
    samples,
    size: int,
    cfg: KernelConfig,
    *,
    seed: int = 0,
) -> WeightedKmePoints:
    """Construct a ``size``-point weighted approximation of the uniform KME.

    ``size >= len(samples)`` short-circuits to the samples themselves with
    uniform weights (an exact representation). Centers are seeded k-means++
    style: the first center is the sample with the highest mean kernel
    value (deterministic), later centers follow the usual squared-distance
    sampling under ``seed``.
    """
    if size < 1:
        raise InvalidInput(f"size must be >= 1, got {size}")
    x = check_embedding_matrix(samples, name="samples").astype(COMPUTE_DTYPE)
    if x.shape[0] == 0:
        raise EmptyInput("samples must be non-empty")
    n = x.shape[0]

    if size >= n:
        return WeightedKmePoints.build(x, np.full(n, 1.0 / n))

    k_nn_mean = float(np.mean(rbf_kernel_matrix(x, x, cfg)))  # (1/N^2) 1'K 1
    centers = _kmeanspp_init(x, size, cfg, seed)
    weights = _solve_weights(centers, x, cfg)
    obj = _objective(centers, weights, x, cfg, k_nn_mean)

    for _ in range(_MAX_ITERS):
        prev = obj
        centers, weights, obj = _center_step(centers, weights, x, cfg, k_nn_mean, obj)
        new_w = _solve_weights(centers, x, cfg)
        new_obj = _objective(centers, new_w, x, cfg, k_nn_mean)
        if new_obj <= obj:
            weights, obj = new_w, new_obj
        if prev - obj < _REL_TOL * max(abs(prev), 1e-30):
            break

    return WeightedKmePoints.build(centers, weights)


def _kmeanspp_init(x: np.ndarray, size: int, cfg: KernelConfig, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    n = x.shape[0]
    density = np.mean(rbf_kernel_matrix(x, x, cfg), axis=1)
    chosen = [int(np.argmax(density))]
    sq = np.sum((x - x[chosen[0]]) ** 2, axis=1)
    while len(chosen) < size:
        total = float(sq.sum())
        if total <= 0.0:
            # all remaining mass sits on already-chosen points
            candidates = [i for i in range(n) if i not in chosen]
            chosen.append(candidates[0] if candidates else chosen[-1])
        else:
            idx = int(rng.choice(n, p=sq / total))
            chosen.append(idx)
        sq = np.minimum(sq, np.sum((x - x[chosen[-1]]) ** 2, axis=1))
    return x[chosen].copy()


def _solve_weights(centers: np.ndarray, x: np.ndarray, cfg: KernelConfig) -> np.ndarray:
    k_rr = rbf_kernel_matrix(centers, centers, cfg)
    k_rn = rbf_kernel_matrix(centers, x, cfg)
    rhs = k_rn.mean(axis=1)
    return np.linalg.solve(k_rr + _RIDGE * np.eye(len(centers)), rhs)


def _objective(centers, weights, x, cfg, k_nn_mean) -> float:
    k_rr = rbf_kernel_matrix(centers, centers, cfg)
    k_rn = rbf_kernel_matrix(centers, x, cfg)
    return float(weights @ k_rr @ weights - 2.0 * weights @ k_rn.mean(axis=1) + k_nn_mean)


def _gradient(centers, weights, x, cfg) -> np.ndarray:
    k_rr = rbf_kernel_matrix(centers, centers, cfg)
    k_rn = rbf_kernel_matrix(centers, x, cfg)
    g_rr = k_rr * weights[None, :]
    mix_term = centers * (g_rr @ np.ones(len(centers)))[:, None] - g_rr @ centers
    data_term = centers * k_rn.sum(axis=1)[:, None] / x.shape[0] - (k_rn @ x) / x.shape[0]
    return 4.0 * cfg.gamma * weights[:, None] * (data_term - mix_term)


def _center_step(centers, weights, x, cfg, k_nn_mean, obj):
    grad = _gradient(centers, weights, x, cfg)
    gmax = float(np.max(np.linalg.norm(grad, axis=1)))
    if gmax <= 0.0:
        return centers, weights, obj
    step = 0.5 / gmax  # cap the largest center move at 0.5
    for _ in range(_MAX_BACKTRACKS):
        cand = centers - step * grad
        cand_obj = _objective(cand, weights, x, cfg, k_nn_mean)
        if cand_obj < obj:
            return cand, weights, cand_obj
        step *= 0.5
    return centers, weights, obj
