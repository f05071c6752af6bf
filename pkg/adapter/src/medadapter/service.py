"""HTTP surface: the /infer wire protocol and a health probe.

Request bodies are parsed by hand so every rejection carries the exact
field that failed; the response body for errors is {"error", "detail"}
with the exception class name as the error code.
"""
from __future__ import annotations

import base64
import json
from typing import Any, Mapping, Sequence

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .errors import (
    AdapterError,
    ClassCountMismatch,
    ModeMismatch,
    SchemaViolation,
    UnknownWeight,
)
from .manifest import HostedModel
from .models import InferenceModel, build_model

__all__ = ["build_app"]


def _status_for(exc: AdapterError) -> int:
    if isinstance(exc, UnknownWeight):
        return 404
    if isinstance(exc, ModeMismatch):
        return 409
    return 400


def _error_response(exc: AdapterError) -> JSONResponse:
    return JSONResponse(
        {"error": type(exc).__name__, "detail": str(exc)}, status_code=_status_for(exc)
    )


async def _read_json(request: Request) -> Mapping[str, Any]:
    raw = await request.body()
    try:
        body = json.loads(raw)
    except (ValueError, UnicodeDecodeError) as exc:
        raise SchemaViolation(f"request body is not valid JSON: {exc}") from exc
    if not isinstance(body, dict):
        raise SchemaViolation("request body must be a JSON object")
    return body


def _require_int(body: Mapping[str, Any], key: str) -> int:
    value = body.get(key)
    if not isinstance(value, int) or isinstance(value, bool):
        raise SchemaViolation(f"'{key}' must be an integer")
    return value


def _decode_payload_image(body: Mapping[str, Any]) -> bytes:
    encoded = body.get("image")
    if not isinstance(encoded, str):
        raise SchemaViolation("'image' must be a base64 string")
    try:
        return base64.b64decode(encoded, validate=True)
    except (ValueError, TypeError) as exc:
        raise SchemaViolation(f"'image' is not valid base64: {exc}") from exc


def build_app(models: Sequence[HostedModel]) -> FastAPI:
    """Assemble the server for a fixed set of hosted models.

    Loading happens here, once; request handling only reads the table, so
    concurrent requests share nothing mutable.
    """
    hosted: dict[str, tuple[HostedModel, InferenceModel]] = {
        model.weight_id: (model, build_model(model)) for model in models
    }
    app = FastAPI(title="medadapter", docs_url=None, redoc_url=None)

    @app.get("/health")
    async def health() -> JSONResponse:
        return JSONResponse({"status": "ok", "weights": sorted(hosted)})

    @app.post("/infer")
    async def infer(request: Request) -> JSONResponse:
        try:
            body = await _read_json(request)
            weight_id = body.get("weight_id")
            if not isinstance(weight_id, str) or not weight_id:
                raise SchemaViolation("'weight_id' must be a non-empty string")
            mode = _require_int(body, "mode")
            class_count = _require_int(body, "class_count")
            image = _decode_payload_image(body)

            entry = hosted.get(weight_id)
            if entry is None:
                raise UnknownWeight(f"weight {weight_id!r} is not hosted here")
            model, runner = entry
            if mode != model.mode:
                raise ModeMismatch(
                    f"weight {weight_id!r} serves mode {model.mode}, request asked for {mode}"
                )
            if class_count != model.class_count:
                raise ClassCountMismatch(
                    f"weight {weight_id!r} has {model.class_count} classes, "
                    f"request asserted {class_count}"
                )
            return JSONResponse(runner.run(image))
        except AdapterError as exc:
            return _error_response(exc)

    return app
