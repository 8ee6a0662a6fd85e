"""Synthetic hub and task generator for the benchmark harness.

The synthetic world is built on the structured mock encoder. Each model is
a style; each pseudo-prompt is a piece of content anchored to one of a
small pool of topics; a generated image embedding is

    normalize(style_weight * s(model, topic)
              + content_weight * c(topic, content)
              + cluster_spread * noise)

and its caption embedding is the content vector plus caption noise. Models
cover a per-model subset of topics (their "themes"), mirroring hubs where
each model specializes. Evaluation prompts reuse the true model's themes
but are disjoint strings from every specification prompt, which is
asserted at build time.

Everything is a pure function of the config seed: rebuilding a fixture
produces byte-identical files.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .assignment import GeneratorHandle, assign_specification
from .encoders import EncoderKind, EncoderProfile, StructuredMockEncoder, stable_seed
from .errors import InvalidConfig, MalformedPayload
from .io import deserialize_feature_matrix, serialize_feature_matrix
from .registry import ModelHub
from .requirements import generate_requirement
from .types import IdentificationTask, PromptOrigin, PromptSet

_PROMPT_TAG = re.compile(r"scene t(\d+) c(\d+)")

FIXTURE_METADATA = "metadata.json"
FIXTURE_REGISTRY = "registry"
FIXTURE_TASKS = "tasks.jsonl"
FIXTURE_TASK_IMAGES = "task_images.fmat"
FIXTURE_TASK_CAPTIONS = "task_captions.fmat"


@dataclass(frozen=True)
class SyntheticHubConfig:
    """Defaults reproduce the benchmark protocol at full scale:
    65 models x 14 evaluation prompts x 10 seeds = 9100 tasks, with
    61-prompt specifications.

    ``gamma`` is the harness-tuned kernel bandwidth recorded with the
    fixture; unit-norm synthetic embeddings need a larger bandwidth than
    the library default to make the kernel local at distances <= 2.
    """

    model_count: int = 65
    prompts_per_spec: int = 61
    eval_prompts_per_model: int = 14
    seeds_per_prompt: int = 10
    embedding_dim: int = 32
    cluster_spread: float = 1.6
    caption_noise: float = 0.1
    seed: int = 0
    topic_count: int = 12
    themes_per_model: int = 4
    topic_jitter: float = 0.3
    style_weight: float = 1.0
    content_weight: float = 1.0
    gamma: float = 2.0

    def __post_init__(self):
        for name in (
            "model_count",
            "prompts_per_spec",
            "eval_prompts_per_model",
            "seeds_per_prompt",
            "embedding_dim",
            "topic_count",
            "themes_per_model",
        ):
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be >= 1")
        for name in ("cluster_spread", "caption_noise", "topic_jitter", "gamma"):
            if getattr(self, name) < 0:
                raise InvalidConfig(f"{name} must be >= 0")
        if self.themes_per_model > self.topic_count:
            raise InvalidConfig("themes_per_model cannot exceed topic_count")
        # theme anchors plus shared overflow topics must stay orthogonal
        if self.topic_count + self.themes_per_model > self.embedding_dim:
            raise InvalidConfig("embedding_dim too small for orthogonal topic anchors")

    @property
    def task_count(self) -> int:
        return self.model_count * self.eval_prompts_per_model * self.seeds_per_prompt


def _spec_prompt(model_index: int, j: int, topic: int) -> str:
    cid = model_index * 100_000 + j
    return f"scene t{topic} c{cid}: reference {j:03d}"


def _eval_prompt(model_index: int, e: int, topic: int) -> str:
    cid = 50_000_000 + model_index * 1_000 + e
    return f"scene t{topic} c{cid}: request {e:02d}"


def _image_payload(model_id: str, prompt: str, seed: int) -> bytes:
    m = _PROMPT_TAG.search(prompt)
    if m is None:
        raise InvalidConfig(f"synthetic prompt missing scene tag: {prompt!r}")
    return (
        f"synthimg style={model_id} topic={int(m.group(1))} "
        f"content={int(m.group(2))} seed={seed}"
    ).encode("ascii")


def synthetic_generator(model_id: str) -> GeneratorHandle:
    """Image-producing generator: renders a tagged payload for the prompt's
    content in this model's style, salted by the seed."""
    return GeneratorHandle(
        model_id=model_id,
        produces="image",
        generate=lambda prompt, seed: _image_payload(model_id, prompt, seed),
    )


@dataclass
class SyntheticFixture:
    config: SyntheticHubConfig
    hub: ModelHub
    tasks: tuple[IdentificationTask, ...]
    encoder: StructuredMockEncoder
    themes: dict[str, list[int]]
    metadata: dict = field(default_factory=dict)

    def generate_image_embedding(self, model_id: str, prompt: str, seed: int) -> np.ndarray:
        """Render one image with the given model and prompt, encoded.

        This is how the harness scores generation quality: the identified
        model re-renders the task's ground-truth prompt.
        """
        payload = _image_payload(model_id, prompt, seed)
        return self.encoder.encode_images([payload])[0]


def build_synthetic_hub(
    cfg: SyntheticHubConfig, data_dir: str | Path | None = None
) -> SyntheticFixture:
    """Build the hub, its specifications, and the identification tasks.

    When ``data_dir`` is given the fixture is persisted there (registry
    subdirectory, task manifest, and task embedding containers).
    """
    root = Path(data_dir) if data_dir is not None else None
    profile = EncoderProfile(
        name=f"synthetic-mock-s{cfg.seed}",
        embedding_dim=cfg.embedding_dim,
        kind=EncoderKind.MOCK,
    )
    encoder = StructuredMockEncoder(
        profile,
        style_weight=cfg.style_weight,
        content_weight=cfg.content_weight,
        image_noise=cfg.cluster_spread,
        caption_noise=cfg.caption_noise,
        topic_jitter=cfg.topic_jitter,
    )
    rng = np.random.default_rng(cfg.seed)
    hub = ModelHub(
        root / FIXTURE_REGISTRY if root is not None else None,
        embedding_dim=cfg.embedding_dim,
        gamma=cfg.gamma,
    )

    # distinct download counts keep the volume baseline's argmax unique
    download_counts = (rng.permutation(cfg.model_count) * 137 + 50).tolist()

    # prompts beyond an equal per-theme budget go to overflow topics shared
    # by every model, so each covering model has the same on-topic count for
    # any evaluation topic and the score's mixture-mass term stays symmetric
    per_theme = cfg.prompts_per_spec // cfg.themes_per_model

    themes: dict[str, list[int]] = {}
    spec_prompts_all: set[str] = set()
    for m in range(cfg.model_count):
        model_id = f"m{m:03d}"
        model_themes = sorted(
            int(t) for t in rng.choice(cfg.topic_count, size=cfg.themes_per_model, replace=False)
        )
        themes[model_id] = model_themes

        def _topic_for(j: int) -> int:
            if j < per_theme * cfg.themes_per_model:
                return model_themes[j % cfg.themes_per_model]
            return cfg.topic_count + (j - per_theme * cfg.themes_per_model)

        prompts = tuple(
            _spec_prompt(m, j, _topic_for(j)) for j in range(cfg.prompts_per_spec)
        )
        spec_prompts_all.update(prompts)
        spec = assign_specification(
            synthetic_generator(model_id),
            PromptSet(prompts, PromptOrigin.DEVELOPER),
            encoder,
            run_seed=cfg.seed,
        )
        hub.submit(
            model_id=model_id,
            display_name=f"Synthetic Model {m:03d}",
            download_count=int(download_counts[m]),
            specification=spec,
        )

    tasks: list[IdentificationTask] = []
    eval_prompts_all: set[str] = set()
    for m in range(cfg.model_count):
        model_id = f"m{m:03d}"
        gen = synthetic_generator(model_id)
        for e in range(cfg.eval_prompts_per_model):
            topic = themes[model_id][e % len(themes[model_id])]
            prompt = _eval_prompt(m, e, topic)
            eval_prompts_all.add(prompt)
            for s in range(cfg.seeds_per_prompt):
                payload = gen.generate(prompt, stable_seed("task-image", model_id, e, s))
                req = generate_requirement([payload], encoder)
                tasks.append(
                    IdentificationTask(
                        task_id=f"{model_id}-e{e:02d}-s{s}",
                        true_model_id=model_id,
                        ground_truth_prompt=prompt,
                        seed=s,
                        image_embeddings=req.image_embeddings,
                        caption_embeddings=req.caption_embeddings,
                        captions=req.captions,
                    )
                )

    overlap = spec_prompts_all & eval_prompts_all
    if overlap:
        raise InvalidConfig(f"specification/evaluation prompt overlap: {sorted(overlap)[:3]}")

    metadata = {
        "format": 1,
        "config": asdict(cfg),
        "encoder": encoder.params(),
        "themes": themes,
        "task_count": len(tasks),
        "prompt_sets_disjoint": True,
    }
    fixture = SyntheticFixture(
        config=cfg,
        hub=hub,
        tasks=tuple(tasks),
        encoder=encoder,
        themes=themes,
        metadata=metadata,
    )
    if root is not None:
        _persist_tasks(fixture, root)
    return fixture


def _persist_tasks(fixture: SyntheticFixture, root: Path) -> None:
    root.mkdir(parents=True, exist_ok=True)
    image_rows = np.concatenate([t.image_embeddings for t in fixture.tasks], axis=0)
    caption_rows = np.concatenate([t.caption_embeddings for t in fixture.tasks], axis=0)
    (root / FIXTURE_TASK_IMAGES).write_bytes(serialize_feature_matrix(image_rows))
    (root / FIXTURE_TASK_CAPTIONS).write_bytes(serialize_feature_matrix(caption_rows))
    with (root / FIXTURE_TASKS).open("w", encoding="utf-8") as fh:
        for row, task in enumerate(fixture.tasks):
            fh.write(
                json.dumps(
                    {
                        "task_id": task.task_id,
                        "true_model_id": task.true_model_id,
                        "prompt": task.ground_truth_prompt,
                        "seed": task.seed,
                        "row": row,
                        "caption": task.captions[0] if task.captions else None,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    (root / FIXTURE_METADATA).write_text(
        json.dumps(fixture.metadata, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_synthetic_fixture(path: str | Path) -> SyntheticFixture:
    """Reload a persisted fixture (registry, tasks, encoder geometry)."""
    root = Path(path)
    try:
        metadata = json.loads((root / FIXTURE_METADATA).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedPayload(f"cannot read fixture metadata: {exc}") from exc
    cfg = SyntheticHubConfig(**metadata["config"])
    encoder = StructuredMockEncoder.from_params(metadata["encoder"])
    hub = ModelHub(root / FIXTURE_REGISTRY)
    images = deserialize_feature_matrix((root / FIXTURE_TASK_IMAGES).read_bytes())
    captions = deserialize_feature_matrix((root / FIXTURE_TASK_CAPTIONS).read_bytes())
    tasks = []
    with (root / FIXTURE_TASKS).open("r", encoding="utf-8") as fh:
        for line in fh:
            meta = json.loads(line)
            row = int(meta["row"])
            tasks.append(
                IdentificationTask(
                    task_id=meta["task_id"],
                    true_model_id=meta["true_model_id"],
                    ground_truth_prompt=meta["prompt"],
                    seed=int(meta["seed"]),
                    image_embeddings=images[row : row + 1],
                    caption_embeddings=captions[row : row + 1],
                    captions=(meta["caption"],) if meta.get("caption") else None,
                )
            )
    return SyntheticFixture(
        config=cfg,
        hub=hub,
        tasks=tuple(tasks),
        encoder=encoder,
        themes={k: list(v) for k, v in metadata.get("themes", {}).items()},
        metadata=metadata,
    )
