"""Estimator-style front end for hub identification.

``ModelIdentifier`` follows the sklearn fit/predict convention so the
matcher composes with the wider ecosystem: ``fit`` ingests the hub's model
records and precomputes per-specification kernel state, ``identify``
ranks models for one requirement, ``predict`` returns top-1 model ids for
a batch of requirements. Scoring across models is read-only and O(M) per
query at fixed specification and requirement sizes.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .encoders import stable_seed
from .errors import DimensionMismatch, DuplicateModel, EmptyInput, EmptyRegistry, InvalidInput
from .kernels import DEFAULT_GAMMA, KernelConfig, rbf_kernel_matrix
from .matching import (
    ALL_METHODS,
    METHOD_BASELINE,
    METHOD_PMI,
    METHOD_PMI_UNWEIGHTED,
    METHOD_RKME,
    MatchScore,
    baseline_rank,
    cosine_matrix,
    pmi_example_scores,
    rank_models,
)
from .reduced_set import build_reduced_set
from .types import COMPUTE_DTYPE, RankedResult, Requirement


class ModelIdentifier(BaseEstimator):
    """Ranks hub models against user requirements.

    Parameters
    ----------
    method:
        Default scoring method: "pmi" (prompt-weighted), "pmi_unweighted"
        (same kernel routine with unit weights), "rkme" (image-only
        reduced-set distance), or "baseline" (download volume).
    gamma:
        RBF kernel bandwidth.
    reduced_set_size:
        Reduced-set size for the rkme method.
    clamp_weights:
        Clamp negative cosine weights to zero (off by default; negative
        weights carry anti-matching information).
    random_state:
        Seed for the deterministic reduced-set construction.
    """

    def __init__(
        self,
        method: str = METHOD_PMI,
        gamma: float = DEFAULT_GAMMA,
        reduced_set_size: int = 1,
        clamp_weights: bool = False,
        random_state: int = 0,
    ):
        self.method = method
        self.gamma = gamma
        self.reduced_set_size = reduced_set_size
        self.clamp_weights = clamp_weights
        self.random_state = random_state

    def fit(self, records, y=None):
        """Ingest model records (with specifications) and cache kernel state."""
        records = list(records)
        if len(records) == 0:
            raise EmptyInput("cannot fit on an empty record list")
        ids = [r.model_id for r in records]
        if len(set(ids)) != len(ids):
            raise DuplicateModel("duplicate model_id among records")
        dims = {r.specification.dim for r in records}
        if len(dims) != 1:
            raise DimensionMismatch(f"specifications disagree on dim: {sorted(dims)}")
        self.records_ = tuple(records)
        self.model_ids_ = tuple(ids)
        self.dim_ = dims.pop()
        cfg = self._cfg()
        self._kernel_mm_ = [
            rbf_kernel_matrix(
                r.specification.image_embeddings, r.specification.image_embeddings, cfg
            )
            for r in records
        ]
        self._reduced_cache_ = {}
        return self

    def _cfg(self) -> KernelConfig:
        return KernelConfig(gamma=self.gamma)

    def _check_fitted(self):
        if not hasattr(self, "records_") or len(self.records_) == 0:
            raise EmptyRegistry("identifier has no fitted models")

    def _reduced_sets(self):
        self._check_fitted()
        key = int(self.reduced_set_size)
        if key not in self._reduced_cache_:
            cfg = self._cfg()
            self._reduced_cache_[key] = [
                build_reduced_set(
                    r.specification.image_embeddings,
                    key,
                    cfg,
                    seed=stable_seed("reduced-set", r.model_id, self.random_state),
                )
                for r in self.records_
            ]
        return self._reduced_cache_[key]

    def score_all(self, req: Requirement, method: str | None = None) -> list[MatchScore]:
        """One MatchScore per fitted model, in fitted order."""
        self._check_fitted()
        method = method or self.method
        if method not in ALL_METHODS:
            raise InvalidInput(f"unknown method {method!r}; choose from {ALL_METHODS}")
        if method == METHOD_BASELINE:
            return [
                MatchScore(r.model_id, -float(r.download_count), METHOD_BASELINE)
                for r in self.records_
            ]
        if req.dim != self.dim_:
            raise DimensionMismatch(f"requirement dim {req.dim} != fitted dim {self.dim_}")
        bounds = [(0, req.n_examples)]
        dist = self._group_distances(
            req.image_embeddings.astype(COMPUTE_DTYPE),
            req.caption_embeddings.astype(COMPUTE_DTYPE),
            bounds,
            method,
        )[:, 0]
        return [
            MatchScore(r.model_id, float(d), method) for r, d in zip(self.records_, dist)
        ]

    def identify(
        self, req: Requirement | None, top_k: int | None = None, method: str | None = None
    ) -> RankedResult:
        """Rank all fitted models for the requirement, best first.

        The baseline method ignores the requirement entirely.
        """
        self._check_fitted()
        method = method or self.method
        if method == METHOD_BASELINE:
            result = baseline_rank(self.records_)
        else:
            result = rank_models(self.score_all(req, method), method=method)
        return result.top(top_k) if top_k is not None else result

    def predict(self, requirements, method: str | None = None) -> list[str]:
        """Top-1 model id for each requirement."""
        return [self.identify(req, top_k=1, method=method).entries[0].model_id
                for req in requirements]

    def batch_group_distances(
        self,
        image_embeddings: np.ndarray,
        caption_embeddings: np.ndarray,
        group_bounds,
        method: str | None = None,
    ) -> np.ndarray:
        """Distance matrix ``(n_models, n_groups)`` for stacked examples.

        ``group_bounds`` lists contiguous (start, end) row ranges, one per
        requirement; this is the bulk path the benchmark harness relies on
        to keep full-hub evaluations vectorized.
        """
        self._check_fitted()
        method = method or self.method
        if method not in ALL_METHODS:
            raise InvalidInput(f"unknown method {method!r}; choose from {ALL_METHODS}")
        z = np.asarray(image_embeddings, dtype=COMPUTE_DTYPE)
        q = np.asarray(caption_embeddings, dtype=COMPUTE_DTYPE)
        bounds = [(int(a), int(b)) for a, b in group_bounds]
        for a, b in bounds:
            if b <= a:
                raise InvalidInput("empty requirement group")
        if method == METHOD_BASELINE:
            col = np.asarray(
                [-float(r.download_count) for r in self.records_], dtype=COMPUTE_DTYPE
            )
            return np.repeat(col[:, None], len(bounds), axis=1)
        if z.shape[1] != self.dim_:
            raise DimensionMismatch(f"requirement dim {z.shape[1]} != fitted dim {self.dim_}")
        return self._group_distances(z, q, bounds, method)

    def _group_distances(self, z, q, bounds, method) -> np.ndarray:
        cfg = self._cfg()
        starts = [a for a, _ in bounds]
        sizes = np.asarray([b - a for a, b in bounds], dtype=COMPUTE_DTYPE)
        out = np.empty((len(self.records_), len(bounds)), dtype=COMPUTE_DTYPE)
        if method in (METHOD_PMI, METHOD_PMI_UNWEIGHTED):
            for m, record in enumerate(self.records_):
                s = pmi_example_scores(
                    record.specification,
                    z,
                    q,
                    cfg,
                    weighted=(method == METHOD_PMI),
                    clamp_weights=self.clamp_weights,
                    kernel_mm=self._kernel_mm_[m],
                )
                sums = np.add.reduceat(s, starts)
                out[m] = sums / sizes
        else:  # rkme
            reduced = self._reduced_sets()
            self_terms = np.asarray(
                [
                    float(r.weights @ rbf_kernel_matrix(r.points, r.points, cfg) @ r.weights)
                    for r in reduced
                ]
            )
            req_terms = np.asarray(
                [
                    float(np.mean(rbf_kernel_matrix(z[a:b], z[a:b], cfg)))
                    for a, b in bounds
                ]
            )
            for m, r in enumerate(reduced):
                cross = r.weights @ rbf_kernel_matrix(r.points, z, cfg)  # (n_examples,)
                cross_mean = np.add.reduceat(cross, starts) / sizes
                out[m] = np.maximum(self_terms[m] - 2.0 * cross_mean + req_terms, 0.0)
        return out


def identify(req: Requirement, records, method: str = METHOD_PMI, top_k: int | None = None,
             cfg: KernelConfig | None = None) -> RankedResult:
    """One-shot identification over a record list (fits a throwaway estimator)."""
    records = list(records)
    if len(records) == 0:
        raise EmptyRegistry("model registry is empty")
    est = ModelIdentifier(method=method, gamma=(cfg or KernelConfig()).gamma)
    est.fit(records)
    return est.identify(req, top_k=top_k)
