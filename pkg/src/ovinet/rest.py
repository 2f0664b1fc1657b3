"""REST + server-push API over the platform service.

Endpoints mirror the operator surface: registry, series queries, alarms,
risk map, RPC dispatch/status, full-store export, and an SSE stream of
ingestion/alarm/RPC events for the dashboard.
"""

from __future__ import annotations

import contextlib
import json
import queue

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse

from .errors import (
    DeviceFaultError,
    DuplicateDeviceError,
    InvalidConfigError,
    InvalidRangeError,
    OvinetError,
    UnknownDeviceError,
    UnknownRequestError,
)
from .service import DeviceRecord, PlatformService
from .simclock import parse_instant

_STATUS = {
    UnknownDeviceError: (404, "not_found"),
    UnknownRequestError: (404, "not_found"),
    DuplicateDeviceError: (409, "conflict"),
    DeviceFaultError: (409, "device_fault"),
    InvalidRangeError: (400, "bad_request"),
    InvalidConfigError: (422, "validation"),
}


def _error_response(exc: OvinetError) -> JSONResponse:
    for klass, (code, name) in _STATUS.items():
        if isinstance(exc, klass):
            return JSONResponse(status_code=code,
                                content={"error": name, "detail": str(exc)})
    return JSONResponse(status_code=400,
                        content={"error": "bad_request", "detail": str(exc)})


def _record_from_doc(doc: dict) -> DeviceRecord:
    try:
        gps = doc["gps"]
        return DeviceRecord(
            device_id=doc["device_id"],
            site=dict(doc.get("site", {})),
            responsible=dict(doc.get("responsible", {})),
            place_type=doc.get("place_type", ""),
            installer=doc.get("installer", ""),
            species=doc.get("species", "Aedes aegypti"),
            gps=(float(gps["lat"]), float(gps["lon"])),
            link=doc.get("link", "wifi_mqtt"),
            fw_version=doc.get("fw_version", "1.0.0"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidConfigError([str(exc)], f"bad registration document: {exc}")


def build_app(service: PlatformService, world=None) -> FastAPI:
    """world, when given, supplies the lock/clock for live RPC dispatch."""
    app = FastAPI(title="ovinet platform", version="0.1.0")

    @app.exception_handler(OvinetError)
    async def _handle(request: Request, exc: OvinetError):
        return _error_response(exc)

    def _locked():
        return world.lock if world is not None else contextlib.nullcontext()

    @app.get("/health")
    def health():
        now = service.scheduler.now if service.scheduler else 0.0
        return {"status": "ok", "sim_now": now, "devices": len(service.devices)}

    @app.get("/devices")
    def list_devices():
        return [rec.public() for rec in service.list_devices()]

    @app.post("/devices", status_code=201)
    def register_device(doc: dict):
        with _locked():
            rec = service.register_device(_record_from_doc(doc))
        return rec.public()

    @app.get("/devices/{device_id}")
    def get_device(device_id: str):
        return service.get_device(device_id).public()

    @app.get("/devices/{device_id}/series")
    def series(device_id: str, key: str, frm: str | None = None,
               to: str | None = None, request: Request = None):
        # 'from' is a reserved word; accept both ?from= and ?frm=
        raw_from = request.query_params.get("from") if request else None
        frm_ts = parse_instant(raw_from or frm) if (raw_from or frm) else 0.0
        to_ts = parse_instant(to) if to else 4102444800.0   # year 2100
        points = service.query_series(device_id, key, frm_ts, to_ts)
        from .simclock import iso_utc
        return {
            "device_id": device_id,
            "key": key,
            "points": [{"ts": iso_utc(ts), "value": v} for ts, v in points],
        }

    @app.get("/alarms")
    def alarms(to: str | None = None, request: Request = None):
        raw_from = request.query_params.get("from") if request else None
        frm_ts = parse_instant(raw_from) if raw_from else None
        to_ts = parse_instant(to) if to else None
        return [a.public() for a in service.alarms_between(frm_ts, to_ts)]

    @app.get("/riskmap")
    def riskmap(at: str | None = None, grid: float | None = None):
        if at is not None:
            at_ts = parse_instant(at)
        elif service.scheduler is not None:
            at_ts = service.scheduler.now
        else:
            at_ts = 0.0
        cells = service.risk_map(at_ts, grid)
        return {"at": at_ts, "grid_m": grid or service.config.default_grid_m,
                "cells": [c.public() for c in cells]}

    @app.post("/devices/{device_id}/rpc", status_code=202)
    def dispatch_rpc(device_id: str, doc: dict):
        kind = doc.get("kind", "")
        params = {k: v for k, v in doc.items() if k != "kind"}
        with _locked():
            request_id = service.dispatch_rpc(device_id, kind, params)
        return {"request_id": request_id,
                "status": service.get_rpc(request_id).status}

    @app.get("/rpc/{request_id}")
    def rpc_status(request_id: str):
        return service.get_rpc(request_id).public()

    @app.get("/export")
    def export():
        body = "\n".join(service.export_lines()) + "\n"
        return PlainTextResponse(body, media_type="application/x-ndjson")

    @app.get("/stream")
    def stream(limit: int | None = None):
        """SSE stream of ingest/alarm/rpc events.

        `limit` bounds the number of frames before the stream closes itself;
        interactive clients leave it unset.
        """
        q = service.subscribe()

        def gen():
            sent = 0
            try:
                yield ": connected\n\n"
                while limit is None or sent < limit:
                    try:
                        item = q.get(timeout=1.0)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        sent += 1
                        continue
                    data = json.dumps(item["data"], separators=(",", ":"))
                    yield f"event: {item['type']}\ndata: {data}\n\n"
                    sent += 1
            finally:
                service.unsubscribe(q)

        return StreamingResponse(gen(), media_type="text/event-stream")

    return app
