"""HTTP planning and execution service.

Endpoints:

* ``GET /health``: liveness plus the loaded weight ids.
* ``GET /weights``: the registry listing.
* ``POST /plan``: request in, resolved plan out.
* ``POST /execute``: request plus image in, execution report out.  Accepts
  ``application/json`` (image as base64) or ``multipart/form-data`` (image as
  a file part).

Every response body is rendered by the shared canonical serializer, so a plan
fetched over HTTP is byte-identical to the one the CLI prints.  Requests are
parsed by hand rather than through framework validators: malformed input must
map to this service's own 400 error document, not a framework-shaped 422.

Each response carries ``X-Request-ID`` and ``X-Phase-Timings`` (seconds per
phase, ``name=value`` pairs joined by semicolons).
"""
from __future__ import annotations

import base64
import binascii
import json
import time
import uuid
from pathlib import Path
from typing import Any, Mapping

from fastapi import FastAPI, Request, Response

from .backends import ImageRef, InferenceBackend, RemoteBackend, StubBackend, StubConfig
from .config import AppConfig
from .demo import demo_registry
from .engine import execute
from .errors import (
    DecodeFailure,
    MedRouterError,
    ProviderFailure,
    SchemaViolation,
    Timeout,
    TransportError,
)
from .jsonio import canonical_json
from .lexicon import SynonymLexicon
from .llm import HttpLlmClient, LlmConfig, plan_with_llm
from .offline import offline_parse
from .plan import Plan
from .registry import Registry, scan_registry
from .resolve import resolve_plan

__all__ = ["create_app"]

REQUEST_ID_HEADER = "X-Request-ID"
TIMINGS_HEADER = "X-Phase-Timings"


class _Timings:
    def __init__(self) -> None:
        self.phases: list[tuple[str, float]] = []

    def add(self, name: str, seconds: float) -> None:
        self.phases.append((name, seconds))

    def header(self) -> str:
        return ";".join(f"{name}={seconds:.6f}" for name, seconds in self.phases)


class _Phase:
    def __init__(self, timings: _Timings, name: str) -> None:
        self.timings = timings
        self.name = name

    def __enter__(self) -> "_Phase":
        self.started = time.perf_counter()
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.timings.add(self.name, time.perf_counter() - self.started)


def _status_for(exc: Exception) -> int:
    if isinstance(exc, Timeout):
        return 504
    if isinstance(exc, (TransportError, ProviderFailure)):
        return 502
    if isinstance(exc, MedRouterError):
        return 400
    return 500


def _json_response(doc: Any, request_id: str, timings: _Timings, status: int = 200) -> Response:
    return Response(
        content=canonical_json(doc),
        status_code=status,
        media_type="application/json",
        headers={REQUEST_ID_HEADER: request_id, TIMINGS_HEADER: timings.header()},
    )


def _error_response(exc: Exception, request_id: str, timings: _Timings) -> Response:
    doc: dict = {"error": type(exc).__name__, "detail": str(exc)}
    issues = getattr(exc, "issues", None)
    if issues:
        doc["issues"] = list(issues)
    return _json_response(doc, request_id, timings, status=_status_for(exc))


async def _read_json(request: Request) -> Mapping[str, Any]:
    raw = await request.body()
    try:
        body = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"request body is not valid JSON: {exc}") from exc
    if not isinstance(body, Mapping):
        raise SchemaViolation("request body must be a JSON object")
    return body


def _require_query(body: Mapping[str, Any]) -> str:
    query = body.get("query")
    if not isinstance(query, str) or not query.strip():
        raise SchemaViolation("'query' must be a non-empty string")
    return query


def _parse_flag(body: Mapping[str, Any], key: str) -> bool:
    value = body.get(key, False)
    if isinstance(value, bool):
        return value
    if isinstance(value, str):
        return value.strip().lower() in ("1", "true", "yes", "on")
    raise SchemaViolation(f"'{key}' must be a boolean")


def _query_flag(request: Request, key: str) -> bool:
    return request.query_params.get(key, "").strip().lower() in ("1", "true", "yes", "on")


def create_app(config: AppConfig | None = None) -> FastAPI:
    """Build the service around one scanned registry."""
    config = config or AppConfig()
    lexicon = config.load_lexicon()
    if config.registry is not None:
        registry: Registry = scan_registry(config.registry, lexicon)
    else:
        registry, lexicon = demo_registry(lexicon=lexicon)

    app = FastAPI(title="medrouter", docs_url=None, redoc_url=None, openapi_url=None)
    app.state.registry = registry
    app.state.lexicon = lexicon
    app.state.config = config

    def _plan_query(query: str, offline: bool) -> Plan:
        if config.frontend == "llm" and not offline:
            return plan_with_llm(query, registry.vocab, HttpLlmClient(LlmConfig.from_env()))
        return offline_parse(query, registry.vocab, lexicon)

    def _backend(forced_outcome: str | None) -> InferenceBackend:
        if config.backend == "remote":
            if forced_outcome is not None:
                raise SchemaViolation("'forced_outcome' only applies to the stub backend")
            return RemoteBackend(
                config.endpoint or "", timeout=config.timeout, output_dir=config.output_dir
            )
        return StubBackend(StubConfig(forced_outcome=forced_outcome), output_dir=config.output_dir)

    @app.get("/health")
    async def health() -> Response:
        timings = _Timings()
        doc = {"status": "ok", "weights": [record.weight_id for record in registry]}
        return _json_response(doc, uuid.uuid4().hex, timings)

    @app.get("/weights")
    async def weights() -> Response:
        timings = _Timings()
        return _json_response(registry.listing(), uuid.uuid4().hex, timings)

    @app.post("/plan")
    async def plan_endpoint(request: Request) -> Response:
        request_id = uuid.uuid4().hex
        timings = _Timings()
        try:
            body = await _read_json(request)
            query = _require_query(body)
            explain = _parse_flag(body, "explain")
            offline = _parse_flag(body, "offline")
            with _Phase(timings, "parse"):
                plan = _plan_query(query, offline)
            with _Phase(timings, "resolve"):
                resolved = resolve_plan(
                    plan, registry, lexicon, params=config.routing_params(), tau=config.tau
                )
            return _json_response(resolved.to_json_dict(explain=explain), request_id, timings)
        except Exception as exc:  # mapped to the documented status codes
            return _error_response(exc, request_id, timings)

    async def _execute_input(
        request: Request, request_id: str
    ) -> tuple[str, bytes, bool, bool, str | None, bool]:
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            query_raw = form.get("query")
            if not isinstance(query_raw, str) or not query_raw.strip():
                raise SchemaViolation("'query' must be a non-empty form field")
            upload = form.get("image")
            if upload is None or isinstance(upload, str):
                raise SchemaViolation("'image' must be an uploaded file")
            image_bytes = await upload.read()

            def form_flag(key: str) -> bool:
                return str(form.get(key, "")).strip().lower() in ("1", "true", "yes", "on")

            forced_raw = form.get("forced_outcome")
            forced = forced_raw if isinstance(forced_raw, str) and forced_raw else None
            return (
                query_raw,
                image_bytes,
                form_flag("explain"),
                form_flag("inline_masks"),
                forced,
                form_flag("offline"),
            )
        body = await _read_json(request)
        query = _require_query(body)
        encoded = body.get("image_base64")
        if not isinstance(encoded, str) or not encoded:
            raise SchemaViolation("'image_base64' must be a base64 string")
        try:
            image_bytes = base64.b64decode(encoded, validate=True)
        except (binascii.Error, ValueError) as exc:
            raise DecodeFailure(f"image_base64 does not decode: {exc}") from exc
        forced = body.get("forced_outcome")
        if forced is not None and not isinstance(forced, str):
            raise SchemaViolation("'forced_outcome' must be a string")
        return (
            query,
            image_bytes,
            _parse_flag(body, "explain"),
            _parse_flag(body, "inline_masks"),
            forced,
            _parse_flag(body, "offline"),
        )

    def _inline_masks(doc: dict) -> dict:
        for entry in doc.get("tasks", ()):
            output = entry.get("output")
            if isinstance(output, dict) and output.get("kind") == "segmentation":
                mask_path = Path(output["mask_path"])
                output["mask_png_base64"] = base64.b64encode(mask_path.read_bytes()).decode("ascii")
        return doc

    @app.post("/execute")
    async def execute_endpoint(request: Request) -> Response:
        request_id = uuid.uuid4().hex
        timings = _Timings()
        try:
            query, image_bytes, explain, inline, forced, offline = await _execute_input(request, request_id)
            inline = inline or _query_flag(request, "inline_masks")
            uploads = Path(config.output_dir) / "uploads"
            uploads.mkdir(parents=True, exist_ok=True)
            image_path = uploads / request_id
            image_path.write_bytes(image_bytes)
            image = ImageRef.open(image_path)
            with _Phase(timings, "parse"):
                plan = _plan_query(query, offline)
            with _Phase(timings, "resolve"):
                resolved = resolve_plan(
                    plan, registry, lexicon, params=config.routing_params(), tau=config.tau
                )
            with _Phase(timings, "execute"):
                report = execute(resolved, _backend(forced), image)
            doc = report.to_json_dict(explain=explain)
            if inline:
                doc = _inline_masks(doc)
            return _json_response(doc, request_id, timings)
        except Exception as exc:
            return _error_response(exc, request_id, timings)

    return app
