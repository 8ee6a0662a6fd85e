"""Matching scores and ranking.

The task-specific score between a specification (Z_m, Q_m) and a
requirement (Z_t, Qhat_t) is a mean of squared RKHS distances, one per
example i:

    (1/N_t) sum_i || (1/N_m) sum_j w_ij k(z_j, .) - k(z_i, .) ||^2
    with w_ij = cos(q_j, qhat_i)

Expanding the norm with k(x, x) = 1 gives, per example,

    s_i = w_i K_mm w_i' / N_m^2 - (2/N_m) w_i . K(Z_m, z_i) + 1

The cosine weights re-focus the specification on spec prompts similar to
the example's caption; forcing all w_ij = 1 reduces s_i to the unweighted
KME distance between the spec cloud and the example (the ablation path,
same routine). Smaller distance means a better match; user-facing
responses expose similarity = -distance.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, DuplicateModelId, EmptyInput
from .kernels import KernelConfig, WeightedKmePoints, _clamp_nonnegative, rbf_kernel_matrix
from .types import (
    COMPUTE_DTYPE,
    MatchScore,
    RankedResult,
    RankEntry,
    Requirement,
    Specification,
)

METHOD_PMI = "pmi"
METHOD_PMI_UNWEIGHTED = "pmi_unweighted"
METHOD_RKME = "rkme"
METHOD_BASELINE = "baseline"
KERNEL_METHODS = (METHOD_PMI, METHOD_PMI_UNWEIGHTED, METHOD_RKME)
ALL_METHODS = KERNEL_METHODS + (METHOD_BASELINE,)


def cosine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``C[i, j] = cos(a_i, b_j)`` in float64."""
    aw = np.asarray(a, dtype=COMPUTE_DTYPE)
    bw = np.asarray(b, dtype=COMPUTE_DTYPE)
    an = aw / np.linalg.norm(aw, axis=1, keepdims=True)
    bn = bw / np.linalg.norm(bw, axis=1, keepdims=True)
    return an @ bn.T


def pmi_example_scores(
    spec: Specification,
    image_embeddings: np.ndarray,
    caption_embeddings: np.ndarray,
    cfg: KernelConfig,
    *,
    weighted: bool = True,
    clamp_weights: bool = False,
    kernel_mm: np.ndarray | None = None,
) -> np.ndarray:
    """Per-example squared RKHS distances against one specification.

    Vectorized over examples; ``kernel_mm`` lets callers reuse the
    spec-internal kernel matrix across many requirements.
    """
    if spec.dim != np.asarray(image_embeddings).shape[1]:
        raise DimensionMismatch(
            f"spec dim {spec.dim} != requirement dim {np.asarray(image_embeddings).shape[1]}"
        )
    n_m = spec.n_pairs
    z_m = spec.image_embeddings.astype(COMPUTE_DTYPE)
    if kernel_mm is None:
        kernel_mm = rbf_kernel_matrix(z_m, z_m, cfg)
    k_mt = rbf_kernel_matrix(z_m, image_embeddings, cfg)  # (n_m, n_examples)
    if weighted:
        w = cosine_matrix(caption_embeddings, spec.prompt_embeddings)  # (n_examples, n_m)
        if clamp_weights:
            w = np.maximum(w, 0.0)
    else:
        w = np.ones((k_mt.shape[1], n_m), dtype=COMPUTE_DTYPE)
    term_mix = np.einsum("ij,jk,ik->i", w, kernel_mm, w) / (n_m * n_m)
    term_cross = -2.0 / n_m * np.sum(w * k_mt.T, axis=1)
    return term_mix + term_cross + 1.0


def pmi_score(
    spec: Specification,
    req: Requirement,
    cfg: KernelConfig,
    *,
    weighted: bool = True,
    clamp_weights: bool = False,
) -> float:
    """Task-specific matching distance; lower is better."""
    scores = pmi_example_scores(
        spec,
        req.image_embeddings.astype(COMPUTE_DTYPE),
        req.caption_embeddings.astype(COMPUTE_DTYPE),
        cfg,
        weighted=weighted,
        clamp_weights=clamp_weights,
    )
    return _clamp_nonnegative(float(np.mean(scores)))


def rkme_score(reduced: WeightedKmePoints, req: Requirement, cfg: KernelConfig) -> float:
    """Image-only baseline: squared RKHS distance between the model's
    reduced-set embedding and the uniform empirical KME of the example
    images. Caption embeddings are ignored by construction."""
    if reduced.dim != req.dim:
        raise DimensionMismatch(f"reduced dim {reduced.dim} != requirement dim {req.dim}")
    from .kernels import kme_sq_distance

    return kme_sq_distance(reduced, WeightedKmePoints.uniform(req.image_embeddings), cfg)


def rank_models(scores, method: str | None = None) -> RankedResult:
    """Strict-count ranking: rank(m) = 1 + |{i : d_i < d_m}|.

    Ties share a rank value; output order is stable by (distance, model_id).
    """
    scores = list(scores)
    if len(scores) == 0:
        raise EmptyInput("no scores to rank")
    ids = [s.model_id for s in scores]
    if len(set(ids)) != len(ids):
        raise DuplicateModelId("duplicate model_id in score list")
    distances = np.asarray([s.distance for s in scores], dtype=COMPUTE_DTYPE)
    order = sorted(range(len(scores)), key=lambda i: (distances[i], ids[i]))
    ranks = 1 + np.sum(distances[None, :] < distances[:, None], axis=1)
    entries = tuple(
        RankEntry(model_id=ids[i], distance=float(distances[i]), rank=int(ranks[i]))
        for i in order
    )
    return RankedResult(entries=entries, method=method or scores[0].method)


def baseline_rank(records) -> RankedResult:
    """Requirement-independent ordering by download volume (descending).

    Encoded as distance = -download_count so the shared rank rule applies;
    equal counts order by model_id.
    """
    records = list(records)
    if len(records) == 0:
        raise EmptyInput("no records to rank")
    scores = [
        MatchScore(model_id=r.model_id, distance=-float(r.download_count), method=METHOD_BASELINE)
        for r in records
    ]
    return rank_models(scores, method=METHOD_BASELINE)
