"""Persistent model hub: record storage, submission, identification.

Storage is an append-only collection of specification container files plus
a JSON index. Submissions are serialized through a single writer lock and
each one replaces the in-memory snapshot atomically, so identification
requests always read a consistent, immutable view and never block.
"""

from __future__ import annotations

import json
import os
import re
import threading
from pathlib import Path

from .assignment import assign_specification, choose_prompt_set
from .encoders import MockEncoder
from .errors import (
    AssignmentFailure,
    DimensionMismatch,
    DuplicateModel,
    EmptyRegistry,
    InvalidInput,
    MalformedPayload,
    ModelNotFound,
)
from .identifier import ModelIdentifier
from .io import (
    deserialize_record_bundle,
    deserialize_specification,
    serialize_record_bundle,
    serialize_specification,
)
from .kernels import DEFAULT_GAMMA
from .types import ModelRecord, PromptOrigin, PromptSet, RankedResult, Requirement, Specification

INDEX_NAME = "registry.json"
SPEC_DIR = "specs"
INDEX_FORMAT = 1

_SLUG_RE = re.compile(r"[^A-Za-z0-9_.-]+")


def _slug(model_id: str) -> str:
    cleaned = _SLUG_RE.sub("_", model_id) or "model"
    if cleaned != model_id:
        import hashlib

        cleaned += "-" + hashlib.blake2b(model_id.encode("utf-8"), digest_size=4).hexdigest()
    return cleaned


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


class ModelHub:
    """Registry of model records with optional on-disk persistence."""

    def __init__(
        self,
        data_dir: str | os.PathLike | None = None,
        *,
        embedding_dim: int | None = None,
        gamma: float = DEFAULT_GAMMA,
        reduced_set_size: int = 1,
        clamp_weights: bool = False,
    ):
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self.embedding_dim = embedding_dim
        self.gamma = gamma
        self.reduced_set_size = reduced_set_size
        self.clamp_weights = clamp_weights
        self._records: tuple[ModelRecord, ...] = ()
        self._identifier: ModelIdentifier | None = None
        self._write_lock = threading.Lock()
        if self.data_dir is not None and (self.data_dir / INDEX_NAME).exists():
            self._load()

    # ------------------------------------------------------------------ state

    def __len__(self) -> int:
        return len(self._records)

    def records(self, tags=None) -> tuple[ModelRecord, ...]:
        """Current snapshot, optionally filtered to records carrying every tag."""
        snapshot = self._records
        if tags:
            wanted = set(tags)
            snapshot = tuple(r for r in snapshot if wanted.issubset(set(r.tags)))
        return snapshot

    def get(self, model_id: str) -> ModelRecord:
        for r in self._records:
            if r.model_id == model_id:
                return r
        raise ModelNotFound(f"no model with id {model_id!r}")

    # ------------------------------------------------------------- submission

    def submit_record(self, record: ModelRecord) -> str:
        """Register a fully-built record; atomic persist + snapshot swap."""
        with self._write_lock:
            if any(r.model_id == record.model_id for r in self._records):
                raise DuplicateModel(f"model_id {record.model_id!r} already registered")
            spec = record.specification
            if self.embedding_dim is None:
                self.embedding_dim = spec.dim
            elif spec.dim != self.embedding_dim:
                raise DimensionMismatch(
                    f"spec dim {spec.dim} != registry dim {self.embedding_dim}"
                )
            if self.data_dir is not None:
                self._persist_record(record)
            self._records = self._records + (record,)
            self._identifier = None
            if self.data_dir is not None:
                self._write_index()
        return record.model_id

    def submit(
        self,
        *,
        model_id: str,
        display_name: str | None = None,
        download_count: int = 0,
        tags=(),
        specification: Specification | None = None,
        image_embeddings=None,
        prompt_embeddings=None,
        prompts=None,
        prompt_origin: PromptOrigin = PromptOrigin.DEFAULT,
        generator=None,
        default_prompts: PromptSet | None = None,
        developer_prompts=None,
        encoder=None,
        run_seed: int = 0,
    ) -> str:
        """Build a specification from the given inputs and register it.

        Three input routes: a prebuilt ``specification``, pre-encoded
        ``image_embeddings``/``prompt_embeddings`` pairs, or a ``generator``
        handle plus prompt options (assigned via the standard pipeline).
        """
        if specification is None:
            if image_embeddings is not None and prompt_embeddings is not None:
                specification = Specification.build(
                    model_id,
                    image_embeddings,
                    prompt_embeddings,
                    prompt_origin=prompt_origin,
                    prompts=prompts,
                    normalize=False,
                )
            elif generator is not None:
                if default_prompts is None and developer_prompts is None:
                    raise InvalidInput("generator submissions need a prompt set")
                chosen = choose_prompt_set(
                    developer_prompts,
                    default_prompts
                    or PromptSet(tuple(developer_prompts), PromptOrigin.DEVELOPER),
                )
                enc = encoder or _default_mock_encoder(self.embedding_dim)
                try:
                    specification = assign_specification(
                        generator, chosen, enc, run_seed=run_seed
                    )
                except Exception as exc:
                    if isinstance(exc, (DuplicateModel, DimensionMismatch)):
                        raise
                    raise AssignmentFailure(f"specification assignment failed: {exc}") from exc
            else:
                raise InvalidInput(
                    "submit needs a specification, pre-encoded pairs, or a generator"
                )
        record = ModelRecord(
            model_id=model_id,
            display_name=display_name or model_id,
            download_count=download_count,
            specification=specification,
            tags=tuple(tags),
        )
        return self.submit_record(record)

    # ----------------------------------------------------------------- query

    def fitted_identifier(self) -> ModelIdentifier:
        if len(self._records) == 0:
            raise EmptyRegistry("model registry is empty")
        ident = self._identifier
        if ident is None:
            ident = ModelIdentifier(
                gamma=self.gamma,
                reduced_set_size=self.reduced_set_size,
                clamp_weights=self.clamp_weights,
            ).fit(self._records)
            self._identifier = ident
        return ident

    def identify(
        self,
        req: Requirement | None,
        method: str = "pmi",
        top_k: int | None = None,
        tags=None,
    ) -> RankedResult:
        if tags:
            filtered = self.records(tags)
            if len(filtered) == 0:
                raise EmptyRegistry("no models match the tag filter")
            ident = ModelIdentifier(
                gamma=self.gamma,
                reduced_set_size=self.reduced_set_size,
                clamp_weights=self.clamp_weights,
            ).fit(filtered)
            return ident.identify(req, top_k=top_k, method=method)
        return self.fitted_identifier().identify(req, top_k=top_k, method=method)

    # ----------------------------------------------------------- bulk export

    def export_specs(self, path) -> int:
        """Write all records to a single bundle file; returns record count."""
        snapshot = self._records
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        _atomic_write(Path(path), serialize_record_bundle(snapshot))
        return len(snapshot)

    def import_specs(self, path) -> int:
        """Load a bundle; refuses the whole import on any id clash."""
        data = Path(path).read_bytes()
        entries = deserialize_record_bundle(data)
        existing = {r.model_id for r in self._records}
        for entry in entries:
            if entry["model_id"] in existing:
                raise DuplicateModel(f"import clashes on model_id {entry['model_id']!r}")
        for entry in entries:
            self.submit_record(
                ModelRecord(
                    model_id=entry["model_id"],
                    display_name=entry.get("display_name", entry["model_id"]),
                    download_count=int(entry.get("download_count", 0)),
                    specification=entry["specification"],
                    tags=tuple(entry.get("tags", ())),
                )
            )
        return len(entries)

    # ----------------------------------------------------------- persistence

    def _spec_path(self, model_id: str) -> Path:
        return self.data_dir / SPEC_DIR / (_slug(model_id) + ".spec")

    def _persist_record(self, record: ModelRecord) -> None:
        spec_dir = self.data_dir / SPEC_DIR
        spec_dir.mkdir(parents=True, exist_ok=True)
        blob = serialize_specification(record.specification)
        _atomic_write(self._spec_path(record.model_id), blob)
        if record.specification.prompts is not None:
            sidecar = self._spec_path(record.model_id).with_suffix(".prompts.json")
            _atomic_write(
                sidecar,
                json.dumps(
                    {
                        "model_id": record.model_id,
                        "prompt_origin": record.specification.prompt_origin.value,
                        "prompts": list(record.specification.prompts),
                    },
                    sort_keys=True,
                    indent=2,
                ).encode("utf-8")
                + b"\n",
            )

    def _write_index(self) -> None:
        index = {
            "format": INDEX_FORMAT,
            "embedding_dim": self.embedding_dim,
            "gamma": self.gamma,
            "models": [
                {
                    "model_id": r.model_id,
                    "display_name": r.display_name,
                    "download_count": r.download_count,
                    "tags": list(r.tags),
                    "spec_file": f"{SPEC_DIR}/{_slug(r.model_id)}.spec",
                }
                for r in self._records
            ],
        }
        self.data_dir.mkdir(parents=True, exist_ok=True)
        payload = json.dumps(index, sort_keys=True, indent=2).encode("utf-8") + b"\n"
        _atomic_write(self.data_dir / INDEX_NAME, payload)

    def _load(self) -> None:
        index_path = self.data_dir / INDEX_NAME
        try:
            index = json.loads(index_path.read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise MalformedPayload(f"cannot read registry index: {exc}") from exc
        if index.get("format", 0) > INDEX_FORMAT:
            from .errors import VersionUnsupported

            raise VersionUnsupported(f"registry index format {index.get('format')}")
        self.embedding_dim = index.get("embedding_dim", self.embedding_dim)
        self.gamma = float(index.get("gamma", self.gamma))
        records = []
        for meta in index.get("models", []):
            blob = (self.data_dir / meta["spec_file"]).read_bytes()
            spec = deserialize_specification(blob)
            records.append(
                ModelRecord(
                    model_id=meta["model_id"],
                    display_name=meta.get("display_name", meta["model_id"]),
                    download_count=int(meta.get("download_count", 0)),
                    specification=spec,
                    tags=tuple(meta.get("tags", ())),
                )
            )
        self._records = tuple(records)
        self._identifier = None


def _default_mock_encoder(dim: int | None):
    from .encoders import EncoderKind, EncoderProfile

    if dim is None:
        raise InvalidInput("registry embedding dim unknown; submit pairs first or set it")
    return MockEncoder(EncoderProfile(name="hub-mock", embedding_dim=dim, kind=EncoderKind.MOCK))
