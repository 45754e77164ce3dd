"""HTTP mirror of the control protocol plus the push stream for the console.

JSON field names here are stable: the operator console depends on them.
"""

from __future__ import annotations

import asyncio
import json
from pathlib import Path
from typing import Optional, Union

from fastapi import FastAPI, HTTPException
from fastapi.responses import HTMLResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .. import pap
from ..errors import AdaptRvError
from .manager import ServiceConfig, SessionManager, UnknownSessionError


class LoadRequest(BaseModel):
    requirement: str = Field(..., description="structured-English requirement text")


class EventRequest(BaseModel):
    event_type: str
    timestamp_ms: Optional[int] = None  # required in virtual time mode


class AdaptationRequest(BaseModel):
    kind: str  # update_time_guard | update_event | add_response | remove_response | split_chain
    new_bound_ms: Optional[int] = None
    which: Union[int, str, None] = None
    old_event: Optional[str] = None
    new_event: Optional[str] = None
    event: Optional[str] = None
    bound_ms: Optional[int] = None
    index: Optional[int] = None

    def to_rule(self) -> pap.AdaptationRule:
        kind = self.kind.lower()
        if kind in ("update_time_guard", "update_guard"):
            if self.new_bound_ms is None:
                raise AdaptRvError("update_time_guard needs new_bound_ms")
            return pap.update_time_guard_rule(
                self.new_bound_ms, which=self.which if self.which is not None else "all"
            )
        if kind == "update_event":
            if not self.old_event or not self.new_event:
                raise AdaptRvError("update_event needs old_event and new_event")
            return pap.update_event_rule(self.old_event, self.new_event)
        if kind == "add_response":
            if not self.event or self.bound_ms is None:
                raise AdaptRvError("add_response needs event and bound_ms")
            return pap.add_response_rule(self.event, self.bound_ms)
        if kind == "remove_response":
            if self.index is None:
                raise AdaptRvError("remove_response needs index")
            return pap.remove_response_rule(self.index)
        if kind in ("split_chain", "split"):
            return pap.split_chain_rule()
        raise AdaptRvError(f"unknown adaptation kind {self.kind!r}")


class SaveRequest(BaseModel):
    path: str


def _http_error(exc: AdaptRvError) -> HTTPException:
    status = 404 if isinstance(exc, UnknownSessionError) else 400
    return HTTPException(status_code=status, detail={"code": exc.code, "message": str(exc)})


def create_app(manager: Optional[SessionManager] = None, config: Optional[ServiceConfig] = None) -> FastAPI:
    manager = manager or SessionManager(config)
    app = FastAPI(title="adaptrv control service", version="0.1.0")
    app.state.manager = manager

    def guarded(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except AdaptRvError as exc:
            raise _http_error(exc) from exc

    @app.get("/")
    def index():
        ui = Path(__file__).resolve().parents[3] / "frontend" / "dist" / "index.html"
        if ui.exists():
            return HTMLResponse(ui.read_text())
        return {
            "service": "adaptrv",
            "sessions": manager.session_ids(),
            "endpoints": [
                "POST /sessions",
                "GET /sessions",
                "GET /sessions/{id}",
                "POST /sessions/{id}/events",
                "POST /events",
                "POST /sessions/{id}/adaptations",
                "GET /sessions/{id}/snapshot",
                "POST /sessions/{id}/save",
                "DELETE /sessions/{id}",
                "GET /stream",
            ],
        }

    @app.post("/sessions")
    def load_session(body: LoadRequest):
        return guarded(manager.load_requirement, body.requirement)

    @app.get("/sessions")
    def list_sessions():
        return [guarded(manager.describe, sid) for sid in manager.session_ids()]

    @app.get("/sessions/{sid}")
    def get_session(sid: int):
        return guarded(manager.describe, sid)

    @app.post("/sessions/{sid}/events")
    def post_event(sid: int, body: EventRequest):
        guarded(manager.submit_event, body.event_type, body.timestamp_ms, sid)
        return guarded(manager.describe, sid)

    @app.post("/events")
    def post_event_broadcast(body: EventRequest):
        return guarded(manager.submit_event, body.event_type, body.timestamp_ms)

    @app.post("/sessions/{sid}/adaptations")
    def post_adaptation(sid: int, body: AdaptationRequest):
        rule = guarded(body.to_rule)
        return guarded(manager.adapt, sid, rule)

    @app.get("/sessions/{sid}/snapshot")
    def get_snapshot(sid: int):
        return guarded(manager.snapshot, sid)

    @app.post("/sessions/{sid}/save")
    def save_session(sid: int, body: SaveRequest):
        return guarded(manager.save, sid, body.path)

    @app.post("/sessions/restore")
    def restore_session(doc: dict):
        return guarded(manager.restore, doc)

    @app.delete("/sessions/{sid}")
    def delete_session(sid: int):
        guarded(manager.delete, sid)
        return {"id": sid, "deleted": True}

    @app.get("/stream")
    async def stream():
        sub = manager.subscribe()

        async def gen():
            try:
                yield ": connected\n\n"
                idle = 0.0
                while True:
                    messages = sub.drain()
                    if messages:
                        idle = 0.0
                        for m in messages:
                            yield f"data: {json.dumps(m, ensure_ascii=False)}\n\n"
                    else:
                        await asyncio.sleep(0.05)
                        idle += 0.05
                        if idle >= 15.0:
                            yield ": keepalive\n\n"
                            idle = 0.0
            finally:
                manager.unsubscribe(sub)

        return StreamingResponse(gen(), media_type="text/event-stream")

    ui_dir = Path(__file__).resolve().parents[3] / "frontend" / "dist"
    if ui_dir.exists():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
