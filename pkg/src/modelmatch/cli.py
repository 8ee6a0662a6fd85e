"""Command-line interface.

Subcommands mirror the service surface: build and serve hubs, submit
models, identify, run and report evaluations, export/import
specifications. Failures print the standard error envelope to stderr and
exit nonzero.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from .encoders import EncoderKind, EncoderProfile, MockEncoder, RemoteEncoder
from .errors import EmptyRegistry, InvalidInput, ModelMatchError
from .evaluation import format_report_table, load_reports, run_evaluation, save_reports
from .io import deserialize_specification
from .registry import ModelHub
from .requirements import generate_requirement, requirement_from_pairs
from .synthetic import SyntheticHubConfig, build_synthetic_hub, load_synthetic_fixture
from .types import PromptOrigin


def _fail(exc: ModelMatchError) -> None:
    click.echo(json.dumps({"error": exc.code, "message": str(exc)}), err=True)
    sys.exit(1)


def _surface_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ModelMatchError as exc:
            _fail(exc)

    return wrapper


def _open_hub(data_dir: str) -> ModelHub:
    return ModelHub(Path(data_dir))


def _load_pairs_file(path: str) -> dict:
    raw = Path(path).read_bytes()
    if raw[:6] == b"MMSPEC":
        spec = deserialize_specification(raw)
        return {
            "image_embeddings": spec.image_embeddings,
            "prompt_embeddings": spec.prompt_embeddings,
            "prompts": list(spec.prompts) if spec.prompts else None,
            "prompt_origin": spec.prompt_origin,
        }
    data = json.loads(raw.decode("utf-8"))
    if not isinstance(data, dict):
        raise InvalidInput("pairs file must contain a JSON object")
    return data


@click.group()
def main():
    """Model hub identification engine."""


# ----------------------------------------------------------------------- hub


@main.group()
def hub():
    """Hub lifecycle commands."""


@hub.command("build-synthetic")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--models", default=65, show_default=True)
@click.option("--spec-prompts", default=61, show_default=True)
@click.option("--eval-prompts", default=14, show_default=True)
@click.option("--seeds", default=10, show_default=True)
@click.option("--dim", default=32, show_default=True)
@click.option("--spread", default=1.6, show_default=True, help="Image embedding noise.")
@click.option("--caption-noise", default=0.1, show_default=True)
@click.option("--topics", default=12, show_default=True)
@click.option("--themes", default=4, show_default=True, help="Topics covered per model.")
@click.option("--gamma", default=2.0, show_default=True, help="Harness kernel bandwidth.")
@click.option("--seed", default=0, show_default=True)
@_surface_errors
def hub_build_synthetic(
    out_dir, models, spec_prompts, eval_prompts, seeds, dim, spread, caption_noise,
    topics, themes, gamma, seed,
):
    """Build a synthetic hub fixture (registry + identification tasks)."""
    cfg = SyntheticHubConfig(
        model_count=models,
        prompts_per_spec=spec_prompts,
        eval_prompts_per_model=eval_prompts,
        seeds_per_prompt=seeds,
        embedding_dim=dim,
        cluster_spread=spread,
        caption_noise=caption_noise,
        topic_count=topics,
        themes_per_model=themes,
        gamma=gamma,
        seed=seed,
    )
    fixture = build_synthetic_hub(cfg, out_dir)
    click.echo(
        json.dumps(
            {
                "fixture": str(out_dir),
                "models": len(fixture.hub),
                "tasks": len(fixture.tasks),
            }
        )
    )


@hub.command("serve")
@click.option("--data", "data_dir", default=None, type=click.Path(exists=True))
@click.option("--config", "config_file", default=None, type=click.Path(exists=True),
              help="JSON config; MODELMATCH_* environment variables override it.")
@click.option("--host", default=None)
@click.option("--port", default=None, type=int)
@click.option(
    "--encoder",
    "encoder_spec",
    default=None,
    help="'mock', 'fixture', or a remote encoder base URL.",
)
@_surface_errors
def hub_serve(data_dir, config_file, host, port, encoder_spec):
    """Serve a hub directory over HTTP."""
    import uvicorn

    from .config import load_service_config
    from .service import create_hub_app

    config = load_service_config(config_file)
    data_dir = data_dir or config.data_dir
    if data_dir is None:
        raise InvalidInput("no data directory (use --data, the config file, or env)")
    host = host or config.host
    port = port if port is not None else config.port
    encoder_spec = encoder_spec or config.encoder

    root = Path(data_dir)
    if (root / "registry").is_dir() and (root / "metadata.json").exists():
        fixture = load_synthetic_fixture(root)
        hub_obj = fixture.hub
        enc = fixture.encoder if encoder_spec in ("mock", "fixture") else None
    else:
        hub_obj = _open_hub(data_dir)
        enc = None
    if enc is None:
        if encoder_spec in ("mock", "fixture"):
            if hub_obj.embedding_dim is None:
                raise EmptyRegistry("hub has no models; submit before serving with a mock encoder")
            enc = MockEncoder(
                EncoderProfile(
                    name="hub-mock", embedding_dim=hub_obj.embedding_dim, kind=EncoderKind.MOCK
                )
            )
        else:
            dim = hub_obj.embedding_dim or 0
            enc = RemoteEncoder(
                EncoderProfile(
                    name="remote",
                    embedding_dim=dim or RemoteEncoderProbe(encoder_spec),
                    kind=EncoderKind.REMOTE,
                    endpoint=encoder_spec,
                )
            )
    uvicorn.run(create_hub_app(hub_obj, enc), host=host, port=port, log_level="warning")


def RemoteEncoderProbe(endpoint: str) -> int:
    probe = RemoteEncoder(
        EncoderProfile(name="probe", embedding_dim=1, kind=EncoderKind.REMOTE, endpoint=endpoint)
    )
    return int(probe.info()["dim"])


# --------------------------------------------------------------------- model


@main.group()
def model():
    """Model submission commands."""


@model.command("submit")
@click.option("--data", "data_dir", required=True, type=click.Path())
@click.option("--model-id", required=True)
@click.option("--display-name", default=None)
@click.option("--downloads", default=0, show_default=True)
@click.option("--tags", default="", help="Comma-separated tag list.")
@click.option("--pairs", "pairs_file", required=True, type=click.Path(exists=True),
              help="Spec container or JSON with image/prompt embeddings.")
@_surface_errors
def model_submit(data_dir, model_id, display_name, downloads, tags, pairs_file):
    """Submit a model with pre-encoded specification pairs."""
    hub_obj = _open_hub(data_dir)
    payload = _load_pairs_file(pairs_file)
    origin = payload.get("prompt_origin", PromptOrigin.DEFAULT)
    if not isinstance(origin, PromptOrigin):
        origin = PromptOrigin(origin)
    hub_obj.submit(
        model_id=model_id,
        display_name=display_name,
        download_count=downloads,
        tags=tuple(t for t in tags.split(",") if t),
        image_embeddings=np.asarray(payload["image_embeddings"], dtype=np.float32),
        prompt_embeddings=np.asarray(payload["prompt_embeddings"], dtype=np.float32),
        prompts=payload.get("prompts"),
        prompt_origin=origin,
    )
    click.echo(json.dumps({"model_id": model_id, "models": len(hub_obj)}))


# ------------------------------------------------------------------ identify


@main.command("identify")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--images", multiple=True, type=click.Path(exists=True))
@click.option("--pairs", "pairs_file", type=click.Path(exists=True),
              help="JSON with image_embeddings and caption_embeddings.")
@click.option("--method", default="pmi", show_default=True)
@click.option("--top-k", default=5, show_default=True)
@click.option("--gamma", default=None, type=float)
@_surface_errors
def identify_cmd(data_dir, images, pairs_file, method, top_k, gamma):
    """Identify the best-matching models for example images."""
    root = Path(data_dir)
    if (root / "registry").is_dir() and (root / "metadata.json").exists():
        fixture = load_synthetic_fixture(root)
        hub_obj, enc = fixture.hub, fixture.encoder
    else:
        hub_obj = _open_hub(data_dir)
        enc = None
    if gamma is not None:
        hub_obj.gamma = gamma
    if pairs_file:
        payload = _load_pairs_file(pairs_file)
        req = requirement_from_pairs(
            payload["image_embeddings"],
            payload.get("caption_embeddings", payload.get("prompt_embeddings")),
            captions=payload.get("captions"),
        )
    elif images:
        if enc is None:
            if hub_obj.embedding_dim is None:
                raise EmptyRegistry("model registry is empty")
            enc = MockEncoder(
                EncoderProfile(
                    name="hub-mock", embedding_dim=hub_obj.embedding_dim, kind=EncoderKind.MOCK
                )
            )
        req = generate_requirement([Path(p).read_bytes() for p in images], enc)
    elif method == "baseline":
        req = None
    else:
        raise InvalidInput("identify requires --images or --pairs")
    result = hub_obj.identify(req, method=method, top_k=top_k)
    click.echo(
        json.dumps(
            {
                "method": result.method,
                "results": [
                    {
                        "model_id": e.model_id,
                        "rank": e.rank,
                        "distance": e.distance,
                        "similarity": e.similarity,
                    }
                    for e in result.entries
                ],
                "captions": list(req.captions) if req is not None and req.captions else None,
            }
        )
    )


# ---------------------------------------------------------------------- eval


@main.group("eval")
def eval_group():
    """Benchmark evaluation commands."""


@eval_group.command("run")
@click.option("--fixture", "fixture_dir", required=True, type=click.Path(exists=True))
@click.option("--methods", default="pmi,rkme,baseline", show_default=True)
@click.option("--examples", default="1", show_default=True, help="Comma list of example counts.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--gamma", default=None, type=float,
              help="Kernel bandwidth; defaults to the fixture's recorded value.")
@click.option("--ks", default="1,2,3,4,5", show_default=True)
@click.option("--fid/--no-fid", "with_fid", default=True, show_default=True)
@_surface_errors
def eval_run(fixture_dir, methods, examples, out_dir, gamma, ks, with_fid):
    """Run the evaluation protocol over a synthetic fixture."""
    fixture = load_synthetic_fixture(fixture_dir)
    method_list = [m.strip() for m in methods.split(",") if m.strip()]
    n_list = [int(n) for n in examples.split(",") if n.strip()]
    k_list = [int(k) for k in ks.split(",") if k.strip()]
    reports = run_evaluation(
        fixture.hub,
        fixture.tasks,
        method_list,
        n_list,
        gamma=fixture.config.gamma if gamma is None else gamma,
        ks=k_list,
        fid_generator=fixture.generate_image_embedding if with_fid else None,
    )
    written = save_reports(reports, out_dir)
    click.echo(json.dumps({"reports": [str(p) for p in written]}))


@eval_group.command("report")
@click.option("--reports", "reports_dir", required=True, type=click.Path(exists=True))
@_surface_errors
def eval_report(reports_dir):
    """Print the combined table for saved evaluation reports."""
    click.echo(format_report_table(load_reports(reports_dir)))


@eval_group.command("fid")
@click.option("--features-a", required=True, type=click.Path(exists=True))
@click.option("--features-b", required=True, type=click.Path(exists=True))
@_surface_errors
def eval_fid(features_a, features_b):
    """Frechet distance between two feature files (binary container or CSV)."""
    from .io import load_feature_matrix
    from .metrics import frechet_distance

    value = frechet_distance(load_feature_matrix(features_a), load_feature_matrix(features_b))
    click.echo(json.dumps({"fid": value}))


# ---------------------------------------------------------------------- spec


@main.group("spec")
def spec_group():
    """Bulk specification transfer."""


@spec_group.command("export")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_file", required=True, type=click.Path())
@_surface_errors
def spec_export(data_dir, out_file):
    root = Path(data_dir)
    if (root / "registry").is_dir() and (root / "metadata.json").exists():
        hub_obj = load_synthetic_fixture(root).hub
    else:
        hub_obj = _open_hub(data_dir)
    count = hub_obj.export_specs(out_file)
    click.echo(json.dumps({"exported": count, "path": str(out_file)}))


@spec_group.command("import")
@click.option("--data", "data_dir", required=True, type=click.Path())
@click.option("--in", "in_file", required=True, type=click.Path(exists=True))
@_surface_errors
def spec_import(data_dir, in_file):
    hub_obj = _open_hub(data_dir)
    count = hub_obj.import_specs(in_file)
    click.echo(json.dumps({"imported": count, "models": len(hub_obj)}))


if __name__ == "__main__":
    main()
