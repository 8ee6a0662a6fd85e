"""Requirement generation: user example images -> matching-space requirement.

Each example image is vision-encoded, captioned by the captioner, and the
caption text-encoded, keeping pairwise index correspondence. Captions are
retained on the requirement for auditability. A pre-encoded path accepts
(image embedding, caption embedding) pairs directly so matching can run
without any encoder in the loop.
"""

from __future__ import annotations

from .errors import CaptionFailure, EncoderFailure, InvalidInput, ModelMatchError
from .types import Requirement


def generate_requirement(examples, encoder) -> Requirement:
    """Encode raw example image payloads into a Requirement."""
    if len(examples) == 0:
        raise InvalidInput("at least one example image is required")
    examples = list(examples)
    try:
        z = encoder.encode_images(examples)
    except ModelMatchError:
        raise
    except Exception as exc:
        raise EncoderFailure(f"vision encoding failed: {exc}") from exc
    try:
        captions = encoder.caption_images(examples)
    except ModelMatchError:
        raise
    except Exception as exc:
        raise CaptionFailure(f"captioning failed: {exc}") from exc
    if len(captions) != len(examples):
        raise CaptionFailure(
            f"captioner returned {len(captions)} captions for {len(examples)} images"
        )
    try:
        q_hat = encoder.encode_texts(captions)
    except ModelMatchError:
        raise
    except Exception as exc:
        raise EncoderFailure(f"caption encoding failed: {exc}") from exc
    return Requirement.build(z, q_hat, captions=captions, normalize=True)


def requirement_from_pairs(image_embeddings, caption_embeddings, *, captions=None) -> Requirement:
    """Pass pre-encoded pairs through unchanged (no re-normalization)."""
    return Requirement.build(
        image_embeddings, caption_embeddings, captions=captions, normalize=False
    )
