"""HTTP front for the engine.

Sessions are created, driven turn by turn, inspected, and deleted over
JSON. Concurrent turns for one session are serialized behind a per-session
lock (or rejected outright, depending on configuration).
"""
from __future__ import annotations

import logging
import threading
from collections import defaultdict

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .config import EngineConfig
from .dialog import Engine, SessionClosed, SessionNotFound
from .store import FileStore

log = logging.getLogger(__name__)


class CreateSessionRequest(BaseModel):
    device_id: str | None = None


class TurnRequest(BaseModel):
    text: str = Field(min_length=1, max_length=4000)
    device_id: str | None = None


def create_app(engine: Engine | None = None, config: EngineConfig | None = None) -> FastAPI:
    if engine is None:
        # The served engine is durable: completed turns and device profiles
        # survive a process restart.
        config = config or EngineConfig()
        engine = Engine(config=config, store=FileStore(config.store_dir / "sessions.jsonl"))
    app = FastAPI(title="conversation engine", docs_url=None, redoc_url=None)
    # Browser clients are typically served from a different origin than the
    # API; the endpoints carry no cookies, so a permissive policy is safe.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.engine = engine
    locks: dict[str, threading.Lock] = defaultdict(threading.Lock)

    @app.exception_handler(RequestValidationError)
    async def invalid_payload(request: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": "invalid payload"})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "sessions": len(engine.store.list_sessions())}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionRequest) -> dict:
        session_id = engine.create_session(device_id=body.device_id)
        return {"session_id": session_id}

    @app.post("/sessions/{session_id}/turns")
    def post_turn(session_id: str, body: TurnRequest) -> dict:
        lock = locks[session_id]
        if engine.config.serialization == "reject":
            if not lock.acquire(blocking=False):
                raise HTTPException(status_code=409, detail="a turn is already in flight")
        else:
            lock.acquire()
        try:
            envelope = engine.handle_turn(session_id, body.text, device_id=body.device_id)
        except SessionNotFound:
            raise HTTPException(status_code=404, detail="unknown session")
        except SessionClosed:
            raise HTTPException(status_code=409, detail="session is closed")
        finally:
            lock.release()
        return envelope.to_dict()

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        try:
            return engine.get_session(session_id)
        except SessionNotFound:
            raise HTTPException(status_code=404, detail="unknown session")

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str) -> None:
        try:
            engine.delete_session(session_id)
        except SessionNotFound:
            raise HTTPException(status_code=404, detail="unknown session")

    return app
