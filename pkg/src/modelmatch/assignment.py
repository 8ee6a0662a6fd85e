"""Specification assignment: from a model's generation interface to its
stored specification.

A submitted model is driven once over the chosen prompt set; the generated
outputs are vision-encoded and the prompts text-encoded into the shared
matching space. Assignment is atomic: any per-prompt failure aborts the
whole specification so partial pair sets never reach the registry.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .encoders import stable_seed
from .errors import DimensionMismatch, EncoderFailure, GenerationFailure, ModelMatchError
from .types import PromptOrigin, PromptSet, Specification

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeneratorHandle:
    """Generation interface for one model.

    ``generate(prompt, seed)`` returns an image payload (``produces="image"``)
    or a pre-encoded image embedding (``produces="embedding"``). Providers
    must be deterministic for a given seed.
    """

    model_id: str
    produces: Literal["image", "embedding"]
    generate: Callable[[str, int], bytes | np.ndarray]


def assign_specification(
    gen: GeneratorHandle,
    prompts: PromptSet,
    encoder,
    *,
    run_seed: int = 0,
) -> Specification:
    """Build the model's specification over ``prompts``.

    One output per prompt; the per-prompt generation seed is derived as
    hash(model_id, prompt index, run_seed) so re-submission reproduces the
    specification bit for bit.
    """
    outputs = []
    for j, prompt in enumerate(prompts.prompts):
        seed = stable_seed(gen.model_id, j, run_seed)
        try:
            outputs.append(gen.generate(prompt, seed))
        except Exception as exc:
            raise GenerationFailure(j, f"model {gen.model_id} failed on prompt {j}: {exc}") from exc

    try:
        if gen.produces == "image":
            z = encoder.encode_images(outputs)
        else:
            z = np.stack([np.asarray(v, dtype=np.float64).reshape(-1) for v in outputs])
        q = encoder.encode_texts(list(prompts.prompts))
    except ModelMatchError:
        raise
    except Exception as exc:
        raise EncoderFailure(f"encoding failed during assignment: {exc}") from exc

    if z.shape[1] != q.shape[1]:
        raise DimensionMismatch(
            f"generator embeddings have dim {z.shape[1]}, encoder produces {q.shape[1]}"
        )
    return Specification.build(
        gen.model_id,
        z,
        q,
        prompt_origin=prompts.origin,
        prompts=prompts.prompts,
    )


def choose_prompt_set(developer_prompts, default_prompts: PromptSet) -> PromptSet:
    """Prefer a valid developer-provided prompt set, else the hub default.

    ``developer_prompts`` may be a PromptSet or a plain list of strings; an
    invalid set (empty, duplicates) falls back to the default with a logged
    warning rather than failing the submission.
    """
    if developer_prompts is None:
        return PromptSet(default_prompts.prompts, PromptOrigin.DEFAULT)
    try:
        if isinstance(developer_prompts, PromptSet):
            return PromptSet(developer_prompts.prompts, PromptOrigin.DEVELOPER)
        return PromptSet(tuple(developer_prompts), PromptOrigin.DEVELOPER)
    except ModelMatchError as exc:
        logger.warning("developer prompt set rejected (%s); using default set", exc)
        return PromptSet(default_prompts.prompts, PromptOrigin.DEFAULT)
