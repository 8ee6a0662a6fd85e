"""Binary container formats.

All containers are little-endian with fixed headers; embedding payloads are
raw row-major float32, so serialize/deserialize round-trips are bit-exact.
Layouts (documented byte-for-byte in the README):

  specification container
      magic   6s   b"MMSPEC"
      version u16  currently 1
      flags   u8   bit0 = embeddings L2-normalized, bit1 = prompt sidecar present
      origin  u8   0 = default prompt set, 1 = developer-provided
      dim     u32
      n_pairs u32
      model_id     u16 length + utf-8 bytes
      [prompts]    u32 count, then per prompt u32 length + utf-8 bytes
      Z data       n_pairs * dim * 4 bytes float32
      Q data       n_pairs * dim * 4 bytes float32

  feature matrix container
      magic b"MMFEAT", version u16, rows u32, cols u32, float32 data

  registry export bundle
      magic b"MMXBND", version u16, model count u32, then per model a
      u32-length-prefixed JSON record followed by a u32-length-prefixed
      specification container
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import MalformedPayload, VersionUnsupported
from .types import PromptOrigin, Specification, validate_specification

SPEC_MAGIC = b"MMSPEC"
FEAT_MAGIC = b"MMFEAT"
BUNDLE_MAGIC = b"MMXBND"
FORMAT_VERSION = 1

_FLAG_NORMALIZED = 0x01
_FLAG_HAS_PROMPTS = 0x02

_ORIGIN_CODES = {PromptOrigin.DEFAULT: 0, PromptOrigin.DEVELOPER: 1}
_ORIGIN_FROM_CODE = {v: k for k, v in _ORIGIN_CODES.items()}


class _Reader:
    """Cursor over a bytes payload; every read checks remaining length."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise MalformedPayload("payload truncated")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack("<" + fmt, self.take(struct.calcsize("<" + fmt)))

    def expect_end(self):
        if self.pos != len(self.data):
            raise MalformedPayload("trailing bytes after payload")


def _pack_str(s: str, width: str = "H") -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<" + width, len(raw)) + raw


def _read_str(r: _Reader, width: str = "H") -> str:
    (n,) = r.unpack(width)
    try:
        return r.take(n).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedPayload(f"invalid utf-8 string: {exc}") from exc


def serialize_specification(spec: Specification) -> bytes:
    validate_specification(spec)
    flags = 0
    if spec.normalized:
        flags |= _FLAG_NORMALIZED
    if spec.prompts is not None:
        flags |= _FLAG_HAS_PROMPTS
    parts = [
        SPEC_MAGIC,
        struct.pack(
            "<HBBII",
            FORMAT_VERSION,
            flags,
            _ORIGIN_CODES[spec.prompt_origin],
            spec.dim,
            spec.n_pairs,
        ),
        _pack_str(spec.model_id),
    ]
    if spec.prompts is not None:
        parts.append(struct.pack("<I", len(spec.prompts)))
        parts.extend(_pack_str(p, "I") for p in spec.prompts)
    parts.append(np.ascontiguousarray(spec.image_embeddings, dtype="<f4").tobytes())
    parts.append(np.ascontiguousarray(spec.prompt_embeddings, dtype="<f4").tobytes())
    return b"".join(parts)


def deserialize_specification(data: bytes) -> Specification:
    r = _Reader(data)
    if r.take(len(SPEC_MAGIC)) != SPEC_MAGIC:
        raise MalformedPayload("bad magic for specification container")
    version, flags, origin_code, dim, n_pairs = r.unpack("HBBII")
    if version > FORMAT_VERSION:
        raise VersionUnsupported(f"specification format version {version} not supported")
    if origin_code not in _ORIGIN_FROM_CODE:
        raise MalformedPayload(f"unknown prompt origin code {origin_code}")
    if dim < 1 or n_pairs < 1:
        raise MalformedPayload("non-positive dim or pair count")
    model_id = _read_str(r)
    prompts = None
    if flags & _FLAG_HAS_PROMPTS:
        (count,) = r.unpack("I")
        prompts = tuple(_read_str(r, "I") for _ in range(count))
    z = np.frombuffer(r.take(n_pairs * dim * 4), dtype="<f4").reshape(n_pairs, dim)
    q = np.frombuffer(r.take(n_pairs * dim * 4), dtype="<f4").reshape(n_pairs, dim)
    r.expect_end()
    z = z.copy()
    q = q.copy()
    z.setflags(write=False)
    q.setflags(write=False)
    spec = Specification(
        model_id=model_id,
        image_embeddings=z,
        prompt_embeddings=q,
        prompt_origin=_ORIGIN_FROM_CODE[origin_code],
        normalized=bool(flags & _FLAG_NORMALIZED),
        prompts=prompts,
    )
    validate_specification(spec)
    return spec


def serialize_feature_matrix(matrix: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(matrix, dtype="<f4")
    if arr.ndim != 2:
        raise MalformedPayload("feature matrix must be 2-D")
    header = FEAT_MAGIC + struct.pack("<HII", FORMAT_VERSION, arr.shape[0], arr.shape[1])
    return header + arr.tobytes()


def deserialize_feature_matrix(data: bytes) -> np.ndarray:
    r = _Reader(data)
    if r.take(len(FEAT_MAGIC)) != FEAT_MAGIC:
        raise MalformedPayload("bad magic for feature matrix container")
    version, rows, cols = r.unpack("HII")
    if version > FORMAT_VERSION:
        raise VersionUnsupported(f"feature matrix format version {version} not supported")
    mat = np.frombuffer(r.take(rows * cols * 4), dtype="<f4").reshape(rows, cols)
    r.expect_end()
    return mat.copy()


def load_feature_matrix(path) -> np.ndarray:
    """Read a feature matrix from the binary container or from CSV."""
    with open(path, "rb") as fh:
        head = fh.read(len(FEAT_MAGIC))
        rest = fh.read()
    if head == FEAT_MAGIC:
        return deserialize_feature_matrix(head + rest)
    text = (head + rest).decode("utf-8")
    try:
        return np.atleast_2d(np.loadtxt(text.splitlines(), delimiter=",", dtype=np.float64))
    except ValueError as exc:
        raise MalformedPayload(f"could not parse feature file: {exc}") from exc


def serialize_record_bundle(records) -> bytes:
    """Bundle (metadata, specification) pairs into one export blob."""
    parts = [BUNDLE_MAGIC, struct.pack("<HI", FORMAT_VERSION, len(records))]
    for rec in records:
        meta = json.dumps(
            {
                "model_id": rec.model_id,
                "display_name": rec.display_name,
                "download_count": rec.download_count,
                "tags": list(rec.tags),
            },
            sort_keys=True,
        ).encode("utf-8")
        blob = serialize_specification(rec.specification)
        parts.append(struct.pack("<I", len(meta)))
        parts.append(meta)
        parts.append(struct.pack("<I", len(blob)))
        parts.append(blob)
    return b"".join(parts)


def deserialize_record_bundle(data: bytes) -> list[dict]:
    """Inverse of :func:`serialize_record_bundle`.

    Returns dicts with keys model_id/display_name/download_count/tags and a
    ``specification`` object; the caller decides how to register them.
    """
    r = _Reader(data)
    if r.take(len(BUNDLE_MAGIC)) != BUNDLE_MAGIC:
        raise MalformedPayload("bad magic for export bundle")
    version, count = r.unpack("HI")
    if version > FORMAT_VERSION:
        raise VersionUnsupported(f"bundle format version {version} not supported")
    out = []
    for _ in range(count):
        (meta_len,) = r.unpack("I")
        try:
            meta = json.loads(r.take(meta_len).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise MalformedPayload(f"invalid record metadata: {exc}") from exc
        (blob_len,) = r.unpack("I")
        spec = deserialize_specification(r.take(blob_len))
        if not isinstance(meta, dict) or "model_id" not in meta:
            raise MalformedPayload("record metadata missing model_id")
        meta["tags"] = tuple(meta.get("tags", ()))
        meta["specification"] = spec
        out.append(meta)
    r.expect_end()
    return out
