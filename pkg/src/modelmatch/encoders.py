"""Client-side gateway to text encoders, vision encoders, and captioners.

Three implementations share one interface:

* :class:`MockEncoder` - hash-seeded pseudo-random unit vectors; a pure
  function of (profile name, input bytes), bit-identical across processes.
* :class:`StructuredMockEncoder` - same purity, but inputs carrying cluster
  tags are mapped to a shared mean plus controlled noise. The synthetic
  benchmark uses this to give images and their captions a geometry in which
  examples land near their generating model's specification.
* :class:`RemoteEncoder` - JSON-over-HTTP client for external encoder
  services (batched, 64 inputs per request).

All encoders return row-major float32 matrices with unit L2 norm.
"""

from __future__ import annotations

import base64
import hashlib
import re
from dataclasses import dataclass
from enum import Enum

import numpy as np
import requests

from .errors import (
    DimensionMismatch,
    EncoderFailure,
    EndpointUnavailable,
    InvalidConfig,
    InvalidInput,
    ProtocolViolation,
)
from .types import COMPUTE_DTYPE, STORAGE_DTYPE

BATCH_LIMIT = 64


class EncoderKind(str, Enum):
    MOCK = "mock"
    REMOTE = "remote"


@dataclass(frozen=True)
class EncoderProfile:
    name: str
    embedding_dim: int
    kind: EncoderKind = EncoderKind.MOCK
    endpoint: str | None = None

    def __post_init__(self):
        if self.embedding_dim < 1:
            raise InvalidConfig("embedding_dim must be >= 1")
        if self.kind == EncoderKind.REMOTE and not self.endpoint:
            raise InvalidConfig("remote encoder profiles require an endpoint")


def stable_seed(*parts) -> int:
    """64-bit seed from a blake2b digest of the parts; process-independent."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        raw = part if isinstance(part, bytes) else str(part).encode("utf-8")
        h.update(len(raw).to_bytes(4, "little"))
        h.update(raw)
    return int.from_bytes(h.digest(), "little")


def hash_unit_vector(dim: int, *parts) -> np.ndarray:
    """Deterministic pseudo-random unit vector keyed by the parts."""
    rng = np.random.Generator(np.random.PCG64(stable_seed(*parts)))
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _finalize(matrix: np.ndarray) -> np.ndarray:
    wide = np.asarray(matrix, dtype=COMPUTE_DTYPE)
    norms = np.linalg.norm(wide, axis=1, keepdims=True)
    out = (wide / norms).astype(STORAGE_DTYPE)
    out.setflags(write=False)
    return out


class MockEncoder:
    """Deterministic stand-in encoder: input bytes -> seeded unit vector."""

    def __init__(self, profile: EncoderProfile):
        self.profile = profile

    @property
    def dim(self) -> int:
        return self.profile.embedding_dim

    def encode_texts(self, texts) -> np.ndarray:
        if len(texts) == 0:
            raise InvalidInput("texts must be non-empty")
        rows = [self._text_vector(t) for t in texts]
        return _finalize(np.stack(rows))

    def encode_images(self, images) -> np.ndarray:
        if len(images) == 0:
            raise InvalidInput("images must be non-empty")
        rows = [self._image_vector(img) for img in images]
        return _finalize(np.stack(rows))

    def caption_images(self, images) -> list[str]:
        if len(images) == 0:
            raise InvalidInput("images must be non-empty")
        return [self._caption(img) for img in images]

    def _text_vector(self, text: str) -> np.ndarray:
        return hash_unit_vector(self.dim, self.profile.name, "text", text)

    def _image_vector(self, image: bytes) -> np.ndarray:
        return hash_unit_vector(self.dim, self.profile.name, "image", image)

    def _caption(self, image: bytes) -> str:
        return "image " + hashlib.blake2b(image, digest_size=6).hexdigest()


_TEXT_TAG = re.compile(r"scene t(\d+) c(\d+)")
_IMAGE_TAG = re.compile(rb"synthimg style=(\S+) topic=(\d+) content=(\d+)")


class StructuredMockEncoder(MockEncoder):
    """Mock encoder with a cluster-tag grammar for controllable geometry.

    Tagged text ("scene t<topic> c<content> ...") maps to a topic-anchored
    content vector plus per-string caption noise. Tagged image payloads
    ("synthimg style=<s> topic=<t> content=<c> ...") map to
    style + content + per-payload noise, normalized. Untagged inputs fall
    back to the plain hash encoding, so the encoder stays a pure function
    of (profile, bytes).
    """

    def __init__(
        self,
        profile: EncoderProfile,
        *,
        style_weight: float = 1.0,
        content_weight: float = 1.0,
        image_noise: float = 0.35,
        caption_noise: float = 0.25,
        topic_jitter: float = 0.3,
    ):
        super().__init__(profile)
        self.style_weight = style_weight
        self.content_weight = content_weight
        self.image_noise = image_noise
        self.caption_noise = caption_noise
        self.topic_jitter = topic_jitter
        self._anchor_cache: dict[int, np.ndarray] = {}
        self._content_cache: dict[tuple[int, int], np.ndarray] = {}
        self._style_cache: dict[tuple[str, int], np.ndarray] = {}

    def params(self) -> dict:
        return {
            "name": self.profile.name,
            "embedding_dim": self.profile.embedding_dim,
            "style_weight": self.style_weight,
            "content_weight": self.content_weight,
            "image_noise": self.image_noise,
            "caption_noise": self.caption_noise,
            "topic_jitter": self.topic_jitter,
        }

    @classmethod
    def from_params(cls, params: dict) -> "StructuredMockEncoder":
        profile = EncoderProfile(
            name=params["name"],
            embedding_dim=int(params["embedding_dim"]),
            kind=EncoderKind.MOCK,
        )
        return cls(
            profile,
            style_weight=params["style_weight"],
            content_weight=params["content_weight"],
            image_noise=params["image_noise"],
            caption_noise=params["caption_noise"],
            topic_jitter=params["topic_jitter"],
        )

    def topic_anchor(self, topic: int) -> np.ndarray:
        """Topic anchors are mutually orthonormal (for topic ids < dim), so
        cross-topic text similarity carries no spurious signal. Built by
        Gram-Schmidt over hash vectors in canonical topic order, which makes
        the anchors independent of query order."""
        cached = self._anchor_cache.get(topic)
        if cached is not None:
            return cached
        v = hash_unit_vector(self.dim, self.profile.name, "topic", topic)
        if 0 <= topic < self.dim:
            for prior in range(topic):
                basis = self.topic_anchor(prior)
                v = v - (v @ basis) * basis
            norm = np.linalg.norm(v)
            if norm > 1e-9:
                v = v / norm
        cached = self._anchor_cache[topic] = v
        return cached

    def content_vector(self, topic: int, content_id: int) -> np.ndarray:
        key = (topic, content_id)
        cached = self._content_cache.get(key)
        if cached is None:
            jitter = hash_unit_vector(self.dim, self.profile.name, "cjit", content_id)
            v = self.topic_anchor(topic) + self.topic_jitter * jitter
            cached = self._content_cache[key] = v / np.linalg.norm(v)
        return cached

    def style_vector(self, style: str, topic: int) -> np.ndarray:
        key = (style, topic)
        cached = self._style_cache.get(key)
        if cached is None:
            cached = self._style_cache[key] = hash_unit_vector(
                self.dim, self.profile.name, "style", style, topic
            )
        return cached

    def _text_vector(self, text: str) -> np.ndarray:
        # text collapses to the topic anchor plus per-string noise: captions
        # describe the subject, not the per-image detail
        m = _TEXT_TAG.search(text)
        if m is None:
            return super()._text_vector(text)
        topic = int(m.group(1))
        noise = hash_unit_vector(self.dim, self.profile.name, "tnoise", text)
        return self.topic_anchor(topic) + self.caption_noise * noise

    def _image_vector(self, image: bytes) -> np.ndarray:
        m = _IMAGE_TAG.search(image)
        if m is None:
            return super()._image_vector(image)
        style = m.group(1).decode("ascii")
        topic, content_id = int(m.group(2)), int(m.group(3))
        noise = hash_unit_vector(self.dim, self.profile.name, "inoise", image)
        return (
            self.style_weight * self.style_vector(style, topic)
            + self.content_weight * self.content_vector(topic, content_id)
            + self.image_noise * noise
        )

    def _caption(self, image: bytes) -> str:
        m = _IMAGE_TAG.search(image)
        if m is None:
            return super()._caption(image)
        view = hashlib.blake2b(image, digest_size=5).hexdigest()
        return f"scene t{int(m.group(2))} c{int(m.group(3))} view {view}"


class RemoteEncoder:
    """HTTP client for the encoder wire protocol; chunks requests at 64."""

    def __init__(self, profile: EncoderProfile, *, timeout: float = 30.0, session=None):
        if profile.kind != EncoderKind.REMOTE:
            raise InvalidConfig("RemoteEncoder requires a remote profile")
        self.profile = profile
        self.timeout = timeout
        self._session = session or requests.Session()

    @property
    def dim(self) -> int:
        return self.profile.embedding_dim

    def info(self) -> dict:
        return self._request("GET", "/v1/info", None)

    def encode_texts(self, texts) -> np.ndarray:
        if len(texts) == 0:
            raise InvalidInput("texts must be non-empty")
        return self._encode_batches("/v1/encode_text", "texts", list(texts))

    def encode_images(self, images) -> np.ndarray:
        if len(images) == 0:
            raise InvalidInput("images must be non-empty")
        encoded = [base64.b64encode(img).decode("ascii") for img in images]
        return self._encode_batches("/v1/encode_image", "images_b64", encoded)

    def caption_images(self, images) -> list[str]:
        if len(images) == 0:
            raise InvalidInput("images must be non-empty")
        captions: list[str] = []
        for start in range(0, len(images), BATCH_LIMIT):
            chunk = images[start : start + BATCH_LIMIT]
            body = {"images_b64": [base64.b64encode(img).decode("ascii") for img in chunk]}
            payload = self._request("POST", "/v1/caption", body)
            got = payload.get("captions")
            if not isinstance(got, list) or len(got) != len(chunk):
                raise ProtocolViolation("caption count does not match input count")
            captions.extend(str(c) for c in got)
        return captions

    def _encode_batches(self, path: str, key: str, items: list) -> np.ndarray:
        rows: list[np.ndarray] = []
        for start in range(0, len(items), BATCH_LIMIT):
            chunk = items[start : start + BATCH_LIMIT]
            payload = self._request("POST", path, {key: chunk})
            vectors = payload.get("vectors")
            if not isinstance(vectors, list) or len(vectors) != len(chunk):
                raise ProtocolViolation("vector count does not match input count")
            if int(payload.get("dim", -1)) != self.profile.embedding_dim:
                raise DimensionMismatch(
                    f"remote returned dim {payload.get('dim')}, "
                    f"profile expects {self.profile.embedding_dim}"
                )
            mat = np.asarray(vectors, dtype=COMPUTE_DTYPE)
            if mat.ndim != 2 or mat.shape[1] != self.profile.embedding_dim:
                raise ProtocolViolation("remote returned malformed vectors")
            if not np.all(np.isfinite(mat)):
                raise ProtocolViolation("remote returned non-finite vectors")
            rows.append(mat)
        return _finalize(np.concatenate(rows, axis=0))

    def _request(self, method: str, path: str, body: dict | None) -> dict:
        url = self.profile.endpoint.rstrip("/") + path
        try:
            if method == "GET":
                resp = self._session.get(url, timeout=self.timeout)
            else:
                resp = self._session.post(url, json=body, timeout=self.timeout)
        except requests.RequestException as exc:
            raise EndpointUnavailable(f"encoder endpoint unreachable: {exc}") from exc
        if resp.status_code >= 400:
            try:
                envelope = resp.json()
                detail = f"{envelope.get('error')}: {envelope.get('message')}"
            except ValueError:
                detail = f"HTTP {resp.status_code}"
            raise EncoderFailure(f"encoder request failed ({detail})")
        try:
            payload = resp.json()
        except ValueError as exc:
            raise ProtocolViolation(f"non-JSON encoder response: {exc}") from exc
        if not isinstance(payload, dict):
            raise ProtocolViolation("encoder response must be a JSON object")
        return payload


def get_encoder(profile: EncoderProfile):
    """Factory for the uniform encoder interface."""
    if profile.kind == EncoderKind.MOCK:
        return MockEncoder(profile)
    return RemoteEncoder(profile)


def encode_texts(texts, profile: EncoderProfile) -> np.ndarray:
    return get_encoder(profile).encode_texts(texts)


def encode_images(images, profile: EncoderProfile) -> np.ndarray:
    return get_encoder(profile).encode_images(images)


def caption_images(images, profile: EncoderProfile) -> list[str]:
    return get_encoder(profile).caption_images(images)
