"""HTTP layer: the hub API and the encoder wire protocol.

Both apps speak JSON with a shared error envelope
``{"error": <code>, "message": <text>}`` and 4xx/5xx status codes.
``create_hub_app`` serves submission/identification/export for a
:class:`~modelmatch.registry.ModelHub`; ``create_encoder_app`` exposes any
in-process encoder over the wire protocol (the same protocol an external
encoder service implements).
"""

from __future__ import annotations

import base64
import binascii

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from . import errors as err
from .registry import ModelHub
from .requirements import generate_requirement, requirement_from_pairs
from .types import PromptOrigin

_STATUS_BY_CODE = {
    "MalformedPayload": 400,
    "InvalidInput": 400,
    "InvalidConfig": 400,
    "InvalidK": 400,
    "MismatchedLengths": 400,
    "DimensionMismatch": 400,
    "NonFiniteValue": 400,
    "ZeroVector": 400,
    "EmptyPromptSet": 400,
    "EmptyInput": 400,
    "VersionUnsupported": 400,
    "InsufficientExamples": 400,
    "DegenerateInput": 400,
    "ModelNotFound": 404,
    "DuplicateModel": 409,
    "DuplicateModelId": 409,
    "EmptyRegistry": 409,
    "EndpointUnavailable": 502,
    "EncoderFailure": 502,
    "CaptionFailure": 502,
    "ProtocolViolation": 502,
}


def _envelope(code: str, message: str, status: int) -> JSONResponse:
    return JSONResponse({"error": code, "message": message}, status_code=status)


def _install_error_handler(app: FastAPI) -> None:
    @app.exception_handler(err.ModelMatchError)
    async def _handle(request: Request, exc: err.ModelMatchError):
        return _envelope(exc.code, str(exc), _STATUS_BY_CODE.get(exc.code, 500))


async def _read_json(request: Request) -> dict:
    try:
        body = await request.json()
    except Exception as exc:
        raise err.MalformedPayload(f"request body is not valid JSON: {exc}") from exc
    if not isinstance(body, dict):
        raise err.MalformedPayload("request body must be a JSON object")
    return body


def _decode_images(items) -> list[bytes]:
    if not isinstance(items, list) or not items:
        raise err.InvalidInput("images_b64 must be a non-empty list")
    out = []
    for i, item in enumerate(items):
        try:
            out.append(base64.b64decode(item, validate=True))
        except (binascii.Error, TypeError, ValueError) as exc:
            raise err.MalformedPayload(f"images_b64[{i}] is not valid base64") from exc
    return out


# --------------------------------------------------------------------- hub app


def create_hub_app(hub: ModelHub, encoder=None) -> FastAPI:
    """Hub service. ``encoder`` handles raw-image identify requests; the
    pre-encoded pairs route works without one."""
    app = FastAPI(title="modelmatch hub", docs_url=None, redoc_url=None)
    _install_error_handler(app)

    @app.post("/v1/models")
    async def submit_model(request: Request):
        body = await _read_json(request)
        model_id = body.get("model_id")
        if not model_id or not isinstance(model_id, str):
            raise err.InvalidInput("model_id (string) is required")
        pairs = body.get("pairs")
        if not isinstance(pairs, dict):
            raise err.InvalidInput("submission requires pre-encoded 'pairs'")
        origin = PromptOrigin(body.get("prompt_origin", "default"))
        hub.submit(
            model_id=model_id,
            display_name=body.get("display_name") or model_id,
            download_count=int(body.get("download_count", 0)),
            tags=tuple(body.get("tags", ())),
            image_embeddings=pairs.get("image_embeddings"),
            prompt_embeddings=pairs.get("prompt_embeddings"),
            prompts=body.get("prompts"),
            prompt_origin=origin,
        )
        record = hub.get(model_id)
        return {"model_id": model_id, "n_pairs": record.specification.n_pairs}

    @app.post("/v1/identify")
    async def identify(request: Request):
        body = await _read_json(request)
        method = body.get("method", "pmi")
        top_k = body.get("top_k")
        top_k = int(top_k) if top_k is not None else None
        tags = body.get("tags")
        captions = None
        if "pairs" in body:
            pairs = body["pairs"]
            if not isinstance(pairs, dict):
                raise err.InvalidInput("pairs must be an object")
            req = requirement_from_pairs(
                pairs.get("image_embeddings"),
                pairs.get("caption_embeddings"),
                captions=pairs.get("captions"),
            )
            captions = req.captions
        elif "images_b64" in body:
            if encoder is None:
                raise err.EncoderFailure("this hub instance has no encoder configured")
            images = _decode_images(body["images_b64"])
            req = generate_requirement(images, encoder)
            captions = req.captions
        elif method == "baseline":
            req = None
        else:
            raise err.InvalidInput("identify requires 'pairs' or 'images_b64'")
        result = hub.identify(req, method=method, top_k=top_k, tags=tags)
        payload = {
            "method": result.method,
            "results": [
                {
                    "model_id": e.model_id,
                    "rank": e.rank,
                    "distance": e.distance,
                    "similarity": e.similarity,
                    "display_name": hub.get(e.model_id).display_name,
                    "download_count": hub.get(e.model_id).download_count,
                }
                for e in result.entries
            ],
        }
        if captions is not None:
            payload["captions"] = list(captions)
        return payload

    @app.get("/v1/models")
    async def list_models():
        return {
            "models": [
                {
                    "model_id": r.model_id,
                    "display_name": r.display_name,
                    "download_count": r.download_count,
                    "tags": list(r.tags),
                    "n_pairs": r.specification.n_pairs,
                    "dim": r.specification.dim,
                }
                for r in hub.records()
            ]
        }

    @app.get("/v1/models/{model_id}")
    async def get_model(model_id: str):
        r = hub.get(model_id)
        return {
            "model_id": r.model_id,
            "display_name": r.display_name,
            "download_count": r.download_count,
            "tags": list(r.tags),
            "n_pairs": r.specification.n_pairs,
            "dim": r.specification.dim,
            "prompt_origin": r.specification.prompt_origin.value,
            "prompts": list(r.specification.prompts) if r.specification.prompts else None,
        }

    @app.get("/v1/export")
    async def export_specs():
        from .io import serialize_record_bundle

        blob = serialize_record_bundle(hub.records())
        return Response(content=blob, media_type="application/octet-stream")

    @app.post("/v1/import")
    async def import_specs(request: Request):
        data = await request.body()
        from .io import deserialize_record_bundle
        from .types import ModelRecord

        entries = deserialize_record_bundle(data)
        existing = {r.model_id for r in hub.records()}
        for entry in entries:
            if entry["model_id"] in existing:
                raise err.DuplicateModel(f"import clashes on {entry['model_id']!r}")
        for entry in entries:
            hub.submit_record(
                ModelRecord(
                    model_id=entry["model_id"],
                    display_name=entry.get("display_name", entry["model_id"]),
                    download_count=int(entry.get("download_count", 0)),
                    specification=entry["specification"],
                    tags=tuple(entry.get("tags", ())),
                )
            )
        return {"imported": len(entries)}

    return app


# ----------------------------------------------------------------- encoder app


def create_encoder_app(encoder, name: str | None = None) -> FastAPI:
    """Serve an in-process encoder over the wire protocol."""
    app = FastAPI(title="modelmatch encoder", docs_url=None, redoc_url=None)
    _install_error_handler(app)
    service_name = name or getattr(encoder.profile, "name", "encoder")

    @app.get("/v1/info")
    async def info():
        return {
            "name": service_name,
            "dim": encoder.dim,
            "capabilities": ["text", "image", "caption"],
        }

    @app.post("/v1/encode_text")
    async def encode_text(request: Request):
        body = await _read_json(request)
        texts = body.get("texts")
        if not isinstance(texts, list) or not texts:
            raise err.InvalidInput("texts must be a non-empty list")
        if not all(isinstance(t, str) for t in texts):
            raise err.InvalidInput("texts must all be strings")
        vectors = encoder.encode_texts(texts)
        return {"dim": encoder.dim, "vectors": [[float(v) for v in row] for row in vectors]}

    @app.post("/v1/encode_image")
    async def encode_image(request: Request):
        body = await _read_json(request)
        images = _decode_images(body.get("images_b64"))
        vectors = encoder.encode_images(images)
        return {"dim": encoder.dim, "vectors": [[float(v) for v in row] for row in vectors]}

    @app.post("/v1/caption")
    async def caption(request: Request):
        body = await _read_json(request)
        images = _decode_images(body.get("images_b64"))
        return {"captions": encoder.caption_images(images)}

    return app
