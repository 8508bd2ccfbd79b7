"""Stateless HTTP scheduling service.

``GET /v1/health`` and ``POST /v1/schedule``. The schedule body carries the
requests, either inline trace records or a ``trace_ref`` naming a CSV inside the
configured trace directory, the limit, slot length and algorithm.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from linsched.api.core import plan_document
from linsched.api.formats import FormatError, parse_requests
from linsched.harness import ALGORITHM_NAMES
from linsched.plan import UnschedulableError
from linsched.trace import TraceError, load_traces, traces_from_rows


class BadRequest(ValueError):
    pass


def _number(body: dict, key: str, default=None) -> float:
    value = body.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
        raise BadRequest(f"{key} must be a positive number")
    return float(value)


def _traces(body: dict, zones: list[str], trace_dir: Path | None):
    if "traces" in body:
        if not isinstance(body["traces"], list):
            raise BadRequest("traces must be a list of {zone, timestamp, intensity_gco2_kwh} records")
        return traces_from_rows(body["traces"], zones)
    if "trace_ref" in body:
        if trace_dir is None:
            raise BadRequest("trace_ref requires the service to be started with a trace directory")
        ref = (trace_dir / str(body["trace_ref"])).resolve()
        if trace_dir.resolve() not in ref.parents or not ref.is_file():
            raise BadRequest(f"unknown trace_ref {body['trace_ref']!r}")
        return load_traces(ref, zones)
    raise BadRequest("body needs inline traces or a trace_ref")


def create_app(trace_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="linsched")
    base = Path(trace_dir) if trace_dir else None

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    @app.post("/v1/schedule")
    async def schedule_endpoint(request: Request):
        try:
            body = json.loads(await request.body())
            if not isinstance(body, dict):
                raise BadRequest("body must be a JSON object")
            requests = parse_requests(body.get("requests"))
            if not requests:
                raise BadRequest("requests must be non-empty")
            algorithm = body.get("algorithm", "lints")
            if algorithm not in ALGORITHM_NAMES:
                raise BadRequest(f"unknown algorithm {algorithm!r}")
            limit = _number(body, "limit_gbps")
            slot_minutes = _number(body, "slot_minutes", 15)
            seed = body.get("seed", 0)
            if isinstance(seed, bool) or not isinstance(seed, int):
                raise BadRequest("seed must be an integer")
            zones = sorted({z for r in requests for z in r.path.zones})
            traces = _traces(body, zones, base)
        except (json.JSONDecodeError, UnicodeDecodeError):
            return JSONResponse({"error": "bad_request", "message": "body is not valid JSON"}, status_code=400)
        except (BadRequest, FormatError, TraceError, ValueError) as exc:
            return JSONResponse({"error": "bad_request", "message": str(exc)}, status_code=400)

        try:
            doc = plan_document(requests, traces, limit, slot_minutes, algorithm, seed)
        except UnschedulableError as exc:
            return JSONResponse(exc.to_dict(), status_code=422)
        except (TraceError, ValueError) as exc:
            return JSONResponse({"error": "bad_request", "message": str(exc)}, status_code=400)
        return JSONResponse(doc.to_dict())

    return app
