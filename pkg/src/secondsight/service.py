"""HTTP gateway.

Thin delegation layer: every endpoint body is produced by the underlying
module operation and serialized canonically (compact separators, fixed key
order), so /query responses are byte-equal to serializing execute_query's
result. Errors surface as {"error": {"code", "message"}} with a stable
machine-readable code. Consent is re-read from disk on every request.
"""

from __future__ import annotations

import json
import socket
import threading
import time
from collections import defaultdict
from typing import Mapping

from fastapi import FastAPI, Request, Response

from .archive import Archive
from .config import ServiceConfig
from .errors import (
    BindFailure,
    InvalidRange,
    SecondSightError,
    UnknownSession,
    UnparsableQuery,
    ValidationError,
)
from .model import dumps, manifest_to_dict, record_to_dict, validate_manifest
from .pipeline import finalize_session, ingest_stream
from .queries import QueryParserProvider
from .retrieval import execute_query, query_result_to_json

_STATUS_BY_CODE = {
    "VALIDATION_ERROR": 400,
    "MISSING_FIELD": 400,
    "INVALID_TIMEZONE": 400,
    "INVALID_RANGE": 400,
    "UNPARSABLE_QUERY": 400,
    "STREAM_UNREADABLE": 400,
    "CONSENT_DISABLED": 403,
    "UNKNOWN_SESSION": 404,
    "DUPLICATE_SESSION": 409,
    "SESSION_FINALIZED": 409,
    "OUT_OF_ORDER_APPEND": 409,
    "ALL_STREAMS_EMPTY": 409,
    "NO_PHYSIO_DATA": 409,
    "ARCHIVE_CORRUPT": 500,
    "BIND_FAILURE": 500,
}


def _json(payload, status: int = 200) -> Response:
    return Response(dumps(payload) + "\n", status_code=status, media_type="application/json")


def _int_param(name: str, value: str | None) -> int | None:
    if value is None:
        return None
    try:
        return int(value)
    except ValueError as exc:
        raise ValidationError(f"{name} must be an integer, got {value!r}") from exc


def _now_ms() -> int:
    return int(time.time() * 1000)


def build_app(config: ServiceConfig, provider: QueryParserProvider | None = None) -> FastAPI:
    """Assemble the service against the configured archive root.

    `provider` overrides the configured LLM parser endpoint (used to inject
    stubs in tests)."""
    archive = Archive(config.archive_root)
    app = FastAPI(title="secondsight", docs_url=None, redoc_url=None, openapi_url=None)
    write_locks: defaultdict[str, threading.Lock] = defaultdict(threading.Lock)

    @app.exception_handler(SecondSightError)
    async def _domain_error(_request: Request, exc: SecondSightError) -> Response:
        status = _STATUS_BY_CODE.get(exc.code, 500)
        return _json({"error": {"code": exc.code, "message": str(exc)}}, status)

    @app.post("/sessions")
    async def create_session(request: Request) -> Response:
        try:
            raw = json.loads(await request.body())
        except ValueError as exc:
            raise ValidationError(f"request body is not valid JSON: {exc}") from exc
        manifest = validate_manifest(raw)
        with write_locks[manifest.session_id]:
            archive.create_session(manifest)
        return _json({"session_id": manifest.session_id}, status=201)

    @app.patch("/sessions/{session_id}/consent")
    async def patch_consent(session_id: str, request: Request) -> Response:
        try:
            raw = json.loads(await request.body())
        except ValueError as exc:
            raise ValidationError(f"request body is not valid JSON: {exc}") from exc
        if not isinstance(raw, Mapping):
            raise ValidationError("consent body must be an object")
        unknown = sorted(set(raw) - {"capture_enabled", "modalities_enabled"})
        if unknown:
            raise ValidationError(f"unknown consent fields: {', '.join(unknown)}")
        with write_locks[session_id]:
            updated = archive.update_manifest(
                session_id,
                capture_enabled=raw.get("capture_enabled"),
                modalities_enabled=raw.get("modalities_enabled"),
            )
        return _json(manifest_to_dict(updated))

    @app.post("/sessions/{session_id}/ingest/{modality}")
    async def ingest(session_id: str, modality: str, request: Request) -> Response:
        if modality not in ("transcript", "physio", "gaze"):
            raise UnknownSession(f"no such ingest modality: {modality!r}")
        body = await request.body()
        with write_locks[session_id]:
            report = ingest_stream(archive, session_id, modality, body)
        return _json(
            {
                "accepted": report.accepted,
                "rejected": report.rejected,
                "first_error": list(report.first_error) if report.first_error else None,
            }
        )

    @app.post("/sessions/{session_id}/finalize")
    async def finalize(session_id: str) -> Response:
        with write_locks[session_id]:
            count = finalize_session(archive, session_id)
        return _json({"session_id": session_id, "record_count": count, "finalized": True})

    @app.get("/query")
    async def query(
        q: str = "",
        sessions: str | None = None,
        limit: str | None = None,
        tz: str | None = None,
        now: str | None = None,
    ) -> Response:
        if not q.strip():
            raise UnparsableQuery("query text is empty")
        scope = None
        if sessions is not None:
            scope = tuple(s for s in (part.strip() for part in sessions.split(",")) if s)
            if not scope:
                raise ValidationError("sessions parameter is empty")
            known = set(archive.list_sessions())
            for sid in scope:
                if sid not in known:
                    raise UnknownSession(f"unknown session: {sid!r}")
        limit_value = _int_param("limit", limit)
        if limit_value is not None and limit_value < 1:
            raise ValidationError("limit must be >= 1")
        result = execute_query(
            archive,
            q,
            now_utc_ms=_int_param("now", now) if now is not None else _now_ms(),
            timezone=tz or config.timezone_default,
            config=config,
            provider=provider,
            sessions=scope,
            limit=limit_value,
        )
        return Response(query_result_to_json(result), media_type="application/json")

    @app.get("/sessions/{session_id}/timeline")
    async def timeline(
        session_id: str, request: Request
    ) -> Response:
        params = request.query_params
        from_second = _int_param("from", params.get("from"))
        to_second = _int_param("to", params.get("to"))
        manifest = archive.manifest(session_id)
        records = archive.read_range(session_id, from_second, to_second)
        return _json(
            {
                "session_id": session_id,
                "timezone": manifest.timezone,
                "started_at": manifest.started_at,
                "from_second": from_second,
                "to_second": to_second,
                "records": [record_to_dict(r) for r in records],
            }
        )

    @app.get("/sessions/{session_id}/stats")
    async def stats(session_id: str, request: Request) -> Response:
        params = request.query_params
        from_second = _int_param("from", params.get("from"))
        to_second = _int_param("to", params.get("to"))
        computed = archive.compute_stats(session_id, from_second, to_second, theta=config.theta)
        return _json(
            {
                "session_id": session_id,
                "from_second": from_second,
                "to_second": to_second,
                "stats": computed.to_dict(),
            }
        )

    @app.delete("/sessions/{session_id}")
    async def delete_session(session_id: str) -> Response:
        with write_locks[session_id]:
            archive.delete_session(session_id)
        return _json({"deleted": session_id})

    @app.delete("/sessions/{session_id}/range")
    async def delete_range(session_id: str, request: Request) -> Response:
        params = request.query_params
        from_second = _int_param("from", params.get("from"))
        to_second = _int_param("to", params.get("to"))
        if from_second is None and to_second is None:
            raise InvalidRange("range delete requires from and/or to")
        with write_locks[session_id]:
            removed = archive.delete_time_range(session_id, from_second, to_second)
        return _json({"session_id": session_id, "removed_count": removed})

    @app.post("/retention/apply")
    async def retention(request: Request) -> Response:
        body = await request.body()
        now = _now_ms()
        if body:
            try:
                raw = json.loads(body)
            except ValueError as exc:
                raise ValidationError(f"request body is not valid JSON: {exc}") from exc
            if not isinstance(raw, Mapping) or set(raw) - {"now_utc_ms"}:
                raise ValidationError("retention body must be {} or {now_utc_ms}")
            if "now_utc_ms" in raw:
                value = raw["now_utc_ms"]
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ValidationError("now_utc_ms must be an integer")
                now = value
        removed = archive.apply_retention(now)
        return _json({"removed": removed})

    return app


def serve(config: ServiceConfig, provider: QueryParserProvider | None = None) -> None:
    """Run the gateway on config.bind_address until interrupted."""
    import uvicorn

    host, port = config.bind_host_port()
    try:
        probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
        probe.close()
    except OSError as exc:
        raise BindFailure(f"cannot bind {config.bind_address}: {exc}") from exc
    app = build_app(config, provider=provider)
    uvicorn.run(app, host=host, port=port, log_level="warning")
