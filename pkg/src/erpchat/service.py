"""HTTP chat service: sessions, turns, durable event streaming.

Turns are processed synchronously per session; concurrent posts to the
same session get 409. Every record is on disk before it reaches any
stream subscriber.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse, StreamingResponse
from pydantic import BaseModel

from .config import AppConfig
from .runtime import Runtime, build_runtime
from .store import SessionStore, StorageFailure, TurnInProgress, UnknownSession

log = logging.getLogger(__name__)

STREAM_POLL_S = 0.5
SESSION_TITLE_CHARS = 64


class MessageIn(BaseModel):
    text: str


class SessionIn(BaseModel):
    title: str | None = None


def _sse_chunk(record) -> str:
    data = json.dumps(record.to_wire(), ensure_ascii=False, sort_keys=True)
    return f"id: {record.index}\nevent: {record.kind}\ndata: {data}\n\n"


def create_app(config: AppConfig, runtime: Runtime | None = None) -> FastAPI:
    runtime = runtime or build_runtime(config)
    store = SessionStore(config.storage_dir)
    app = FastAPI(title="erpchat", version="0.1.0")
    app.state.runtime = runtime
    app.state.store = store

    @app.exception_handler(UnknownSession)
    def _unknown(request: Request, exc: UnknownSession):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(TurnInProgress)
    def _busy(request: Request, exc: TurnInProgress):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(StorageFailure)
    def _storage(request: Request, exc: StorageFailure):
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "database": runtime.config.database_path}

    @app.get("/schema")
    def schema():
        return PlainTextResponse(
            runtime.schema.rendered, media_type="text/markdown; charset=utf-8"
        )

    @app.post("/sessions", status_code=201)
    def create_session(body: SessionIn | None = None):
        session_id = store.create_session(body.title if body else None)
        return {"session_id": session_id}

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": store.list_sessions()}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return store.transcript(session_id)

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageIn):
        text = body.text.strip()
        if not text:
            raise HTTPException(status_code=422, detail="text must be non-empty")
        lock = store.turn_lock(session_id)
        if not lock.acquire(blocking=False):
            raise TurnInProgress(session_id)
        try:
            state = store.load_state(session_id)
            store.set_title(session_id, text[:SESSION_TITLE_CHARS])
            store.append(session_id, "user_message", {"text": text})
            reply, status, events = runtime.orchestrator.handle_turn(
                state,
                text,
                on_event=lambda event: store.append(
                    session_id, "agent_event", event.to_dict()
                ),
            )
            store.append(session_id, "reply", {"text": reply, "status": status})
            store.save_state(state)
        finally:
            lock.release()
        return {
            "session_id": session_id,
            "reply": reply,
            "status": status,
            "events": [event.to_dict() for event in events],
        }

    @app.get("/sessions/{session_id}/events")
    def stream_events(session_id: str, request: Request, after: int | None = None,
                      follow: bool = True):
        store.require_session(session_id)
        start_after = after
        if start_after is None:
            header = request.headers.get("last-event-id")
            start_after = int(header) if header and header.lstrip("-").isdigit() else -1

        def generate():
            cursor = start_after
            for record in store.records(session_id, cursor):
                cursor = record.index
                yield _sse_chunk(record)
            if not follow:
                return
            while True:
                fresh = store.wait_for_records(session_id, cursor, STREAM_POLL_S)
                if not fresh:
                    yield ": keepalive\n\n"
                    continue
                for record in fresh:
                    cursor = record.index
                    yield _sse_chunk(record)

        return StreamingResponse(
            generate(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    ui_dir = Path(config.ui_dir) if config.ui_dir else None
    if ui_dir and ui_dir.is_dir():
        from fastapi.staticfiles import StaticFiles

        @app.get("/")
        def index():
            return FileResponse(ui_dir / "index.html")

        app.mount("/assets", StaticFiles(directory=ui_dir / "assets"), name="assets")

    return app
