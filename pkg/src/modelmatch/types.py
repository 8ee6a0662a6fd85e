"""Core domain types and input-validation helpers.

Embeddings are plain numpy arrays: a single embedding is a 1-D vector and a
set of embeddings is a row-major ``(n, dim)`` matrix. Matrices are stored as
float32 (the encoder output precision) and widened to float64 inside kernel
arithmetic. All types here are immutable after construction and safe to
share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyInput,
    EmptyPromptSet,
    InvalidInput,
    MismatchedLengths,
    NonFiniteValue,
    ZeroVector,
)

STORAGE_DTYPE = np.float32
COMPUTE_DTYPE = np.float64


class PromptOrigin(str, Enum):
    DEFAULT = "default"
    DEVELOPER = "developer-provided"


def check_embedding_matrix(
    values,
    *,
    dim: int | None = None,
    name: str = "embeddings",
    allow_empty: bool = False,
) -> np.ndarray:
    """Validate and coerce ``values`` into a float32 ``(n, dim)`` matrix.

    Rejects non-finite entries and zero rows (zero vectors cannot be
    L2-normalized and break cosine weighting). A 1-D input is treated as a
    single embedding.
    """
    arr = np.asarray(values)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise InvalidInput(f"{name} must be a 2-D matrix, got ndim={arr.ndim}")
    if arr.shape[0] == 0:
        if allow_empty:
            return np.empty((0, dim or arr.shape[1]), dtype=STORAGE_DTYPE)
        raise EmptyInput(f"{name} must contain at least one row")
    if arr.shape[1] < 1:
        raise InvalidInput(f"{name} must have at least one column")
    if not np.issubdtype(arr.dtype, np.floating) and not np.issubdtype(arr.dtype, np.integer):
        raise InvalidInput(f"{name} must be numeric, got dtype={arr.dtype}")
    arr = arr.astype(STORAGE_DTYPE, copy=True)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"{name} contains NaN or Inf entries")
    norms = np.linalg.norm(arr.astype(COMPUTE_DTYPE), axis=1)
    if np.any(norms == 0.0):
        raise ZeroVector(f"{name} contains a zero vector")
    if dim is not None and arr.shape[1] != dim:
        raise DimensionMismatch(f"{name}: expected dim {dim}, got {arr.shape[1]}")
    arr.setflags(write=False)
    return arr


def l2_normalize(matrix: np.ndarray) -> np.ndarray:
    """Row-wise L2 normalization, computed in float64 and stored as float32."""
    wide = matrix.astype(COMPUTE_DTYPE)
    norms = np.linalg.norm(wide, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ZeroVector("cannot normalize a zero vector")
    out = (wide / norms).astype(STORAGE_DTYPE)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PromptSet:
    """Ordered, duplicate-free list of prompt strings."""

    prompts: tuple[str, ...]
    origin: PromptOrigin = PromptOrigin.DEFAULT

    def __post_init__(self):
        object.__setattr__(self, "prompts", tuple(self.prompts))
        if len(self.prompts) == 0:
            raise EmptyPromptSet("prompt set must be non-empty")
        if len(set(self.prompts)) != len(self.prompts):
            raise InvalidInput("prompt set contains duplicate strings")

    def __len__(self) -> int:
        return len(self.prompts)


@dataclass(frozen=True)
class Specification:
    """Per-model functionality summary: paired image and prompt embeddings.

    Row ``j`` of ``image_embeddings`` was generated from the prompt whose
    encoding is row ``j`` of ``prompt_embeddings``; the pairing is what the
    prompt-weighted matching score relies on.
    """

    model_id: str
    image_embeddings: np.ndarray  # (n_pairs, dim) float32
    prompt_embeddings: np.ndarray  # (n_pairs, dim) float32
    prompt_origin: PromptOrigin = PromptOrigin.DEFAULT
    normalized: bool = True
    prompts: tuple[str, ...] | None = None  # audit sidecar, not used in matching

    @classmethod
    def build(
        cls,
        model_id: str,
        image_embeddings,
        prompt_embeddings,
        *,
        prompt_origin: PromptOrigin = PromptOrigin.DEFAULT,
        normalize: bool = True,
        prompts=None,
    ) -> "Specification":
        """Ingestion path: validates, optionally L2-normalizes, pairs rows."""
        z = check_embedding_matrix(image_embeddings, name="image_embeddings")
        q = check_embedding_matrix(prompt_embeddings, name="prompt_embeddings")
        if z.shape[0] != q.shape[0]:
            raise MismatchedLengths(
                f"image/prompt embedding counts differ: {z.shape[0]} != {q.shape[0]}"
            )
        if z.shape[1] != q.shape[1]:
            raise DimensionMismatch(
                f"image/prompt embedding dims differ: {z.shape[1]} != {q.shape[1]}"
            )
        if normalize:
            z = l2_normalize(z)
            q = l2_normalize(q)
        spec = cls(
            model_id=model_id,
            image_embeddings=z,
            prompt_embeddings=q,
            prompt_origin=prompt_origin,
            normalized=normalize,
            prompts=tuple(prompts) if prompts is not None else None,
        )
        validate_specification(spec)
        return spec

    @property
    def n_pairs(self) -> int:
        return self.image_embeddings.shape[0]

    @property
    def dim(self) -> int:
        return self.image_embeddings.shape[1]


@dataclass(frozen=True)
class Requirement:
    """User-side counterpart of a specification.

    ``image_embeddings`` come from the user's example images,
    ``caption_embeddings`` from machine-generated captions of the same
    images, with pairwise index correspondence.
    """

    image_embeddings: np.ndarray  # (n_examples, dim) float32
    caption_embeddings: np.ndarray  # (n_examples, dim) float32
    captions: tuple[str, ...] | None = None

    @classmethod
    def build(cls, image_embeddings, caption_embeddings, *, captions=None, normalize: bool = True):
        z = check_embedding_matrix(image_embeddings, name="image_embeddings")
        q = check_embedding_matrix(caption_embeddings, name="caption_embeddings")
        if z.shape[0] != q.shape[0]:
            raise MismatchedLengths(
                f"image/caption embedding counts differ: {z.shape[0]} != {q.shape[0]}"
            )
        if z.shape[1] != q.shape[1]:
            raise DimensionMismatch(
                f"image/caption embedding dims differ: {z.shape[1]} != {q.shape[1]}"
            )
        if captions is not None and len(captions) != z.shape[0]:
            raise MismatchedLengths("caption text count differs from embedding count")
        if normalize:
            z = l2_normalize(z)
            q = l2_normalize(q)
        return cls(
            image_embeddings=z,
            caption_embeddings=q,
            captions=tuple(captions) if captions is not None else None,
        )

    @property
    def n_examples(self) -> int:
        return self.image_embeddings.shape[0]

    @property
    def dim(self) -> int:
        return self.image_embeddings.shape[1]


@dataclass(frozen=True)
class ModelRecord:
    """Registry entry: identity, hub metadata, and the stored specification."""

    model_id: str
    display_name: str
    download_count: int
    specification: Specification
    tags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.download_count < 0:
            raise InvalidInput("download_count must be non-negative")
        if self.model_id != self.specification.model_id:
            raise InvalidInput("record/spec model_id mismatch")


@dataclass(frozen=True)
class IdentificationTask:
    """One benchmark unit: example inputs plus ground truth.

    ``example_images`` holds raw payloads; alternatively the task carries
    pre-encoded (image, caption) embedding pairs so matching can be tested
    without any encoder in the loop.
    """

    task_id: str
    true_model_id: str
    ground_truth_prompt: str
    seed: int
    example_images: tuple[bytes, ...] | None = None
    image_embeddings: np.ndarray | None = None
    caption_embeddings: np.ndarray | None = None
    captions: tuple[str, ...] | None = None

    def __post_init__(self):
        has_raw = self.example_images is not None and len(self.example_images) > 0
        has_encoded = (
            self.image_embeddings is not None
            and self.caption_embeddings is not None
            and self.image_embeddings.shape[0] > 0
        )
        if not has_raw and not has_encoded:
            raise EmptyInput("task needs at least one example input")


@dataclass(frozen=True)
class RankEntry:
    model_id: str
    distance: float
    rank: int

    @property
    def similarity(self) -> float:
        # user-facing orientation: larger is better
        return -self.distance


@dataclass(frozen=True)
class RankedResult:
    """Models sorted best-first with strict-count ranks (ties share a rank)."""

    entries: tuple[RankEntry, ...]
    method: str = "pmi"

    @property
    def ranks(self) -> dict[str, int]:
        return {e.model_id: e.rank for e in self.entries}

    def rank_of(self, model_id: str) -> int:
        for e in self.entries:
            if e.model_id == model_id:
                return e.rank
        raise KeyError(model_id)

    def top(self, k: int) -> "RankedResult":
        return replace(self, entries=self.entries[: max(k, 0)])

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class MatchScore:
    """Squared-RKHS-distance score of one model for one requirement."""

    model_id: str
    distance: float
    method: str = "pmi"


def validate_specification(spec: Specification) -> None:
    """Check every specification invariant; raises on the first violation."""
    z, q = spec.image_embeddings, spec.prompt_embeddings
    if z.ndim != 2 or q.ndim != 2:
        raise InvalidInput("embeddings must be 2-D matrices")
    if z.shape[0] != q.shape[0]:
        raise MismatchedLengths(
            f"image/prompt embedding counts differ: {z.shape[0]} != {q.shape[0]}"
        )
    if z.shape[0] < 1:
        raise EmptyInput("specification must contain at least one pair")
    if z.shape[1] != q.shape[1]:
        raise DimensionMismatch(
            f"image/prompt embedding dims differ: {z.shape[1]} != {q.shape[1]}"
        )
    for name, arr in (("image_embeddings", z), ("prompt_embeddings", q)):
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValue(f"{name} contains NaN or Inf entries")
        if np.any(np.linalg.norm(arr.astype(COMPUTE_DTYPE), axis=1) == 0.0):
            raise ZeroVector(f"{name} contains a zero vector")
    if spec.prompts is not None and len(spec.prompts) != z.shape[0]:
        raise MismatchedLengths("prompt sidecar length differs from pair count")


def specifications_equal(a: Specification, b: Specification) -> bool:
    """Bit-exact equality, used by round-trip tests and import verification."""
    return (
        a.model_id == b.model_id
        and a.prompt_origin == b.prompt_origin
        and a.normalized == b.normalized
        and a.prompts == b.prompts
        and a.image_embeddings.shape == b.image_embeddings.shape
        and a.image_embeddings.tobytes() == b.image_embeddings.tobytes()
        and a.prompt_embeddings.tobytes() == b.prompt_embeddings.tobytes()
    )
