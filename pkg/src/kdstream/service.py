"""HTTP session service: a live interactive run a human can answer through.

Each session wraps one engine. The stream advances while polling for events
and pauses whenever a question is open; answers are validated before being
applied, and every event is persisted to an append-only JSON-lines file so a
session can be replayed headlessly.
"""
from __future__ import annotations

import json
import os
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .adaptation import AdaptationError
from .disambiguation import DisambiguationError, KdEdit
from .runner import ConfigError, Engine, RunConfig


class SessionState(BaseModel):
    id: str
    state: str  # streaming | paused-at-question | finished
    iteration: int
    interactions: int


class CreateSessionRequest(BaseModel):
    config: dict


class AnswerRequest(BaseModel):
    edits: list[dict] = Field(default_factory=list)
    deselected: list[str] = Field(default_factory=list)


class Session:
    def __init__(self, sid: str, engine: Engine, log_path: Path):
        self.id = sid
        self.engine = engine
        self.log_path = log_path
        self.lock = threading.Lock()
        self._persisted = 0

    @property
    def state(self) -> str:
        if self.engine.awaiting_answer:
            return "paused-at-question"
        return "finished" if self.engine.finished else "streaming"

    def advance(self):
        """Run the stream forward until a question opens or the run ends."""
        while not self.engine.finished and not self.engine.awaiting_answer:
            self.engine.step()
        self._persist()

    def _persist(self):
        events = self.engine.events
        if self._persisted < len(events):
            with open(self.log_path, "a") as fh:
                for event in events[self._persisted:]:
                    fh.write(json.dumps(event) + "\n")
            self._persisted = len(events)

    def describe(self) -> SessionState:
        return SessionState(id=self.id, state=self.state, iteration=self.engine.t,
                            interactions=self.engine.interactions)


def create_app(storage_dir: str | os.PathLike | None = None) -> FastAPI:
    app = FastAPI(title="kdstream session service", version="1")
    storage = Path(storage_dir or os.environ.get("KDSTREAM_SESSIONS", "sessions"))
    sessions: dict[str, Session] = {}

    def get_session(sid: str) -> Session:
        session = sessions.get(sid)
        if session is None:
            raise HTTPException(404, f"unknown session {sid!r}")
        return session

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSessionRequest):
        try:
            cfg = RunConfig.from_json({**req.config, "user": "pause"})
        except (ConfigError, TypeError) as exc:
            raise HTTPException(422, f"invalid config: {exc}") from exc
        if cfg.method != "trckd_interactive":
            raise HTTPException(422, "interactive sessions require method=trckd_interactive")
        seed = cfg.eval_seeds[0] if cfg.eval_seeds else 0
        storage.mkdir(parents=True, exist_ok=True)
        sid = uuid.uuid4().hex[:12]
        engine = Engine(cfg, seed, user=None)
        sessions[sid] = Session(sid, engine, storage / f"{sid}.jsonl")
        sessions[sid]._persist()
        return {"id": sid, "state": sessions[sid].state}

    @app.get("/sessions/{sid}")
    def session_state(sid: str):
        return get_session(sid).describe()

    @app.get("/sessions/{sid}/events")
    def poll_events(sid: str, since: int = -1):
        session = get_session(sid)
        with session.lock:
            session.advance()
            events = [e for e in session.engine.events if e["cursor"] > since]
        return {"events": events, "state": session.state}

    @app.post("/sessions/{sid}/answer")
    def submit_answer(sid: str, req: AnswerRequest):
        session = get_session(sid)
        with session.lock:
            if not session.engine.awaiting_answer:
                raise HTTPException(409, "no open question")
            try:
                edits = [KdEdit.from_json(e) for e in req.edits]
            except KeyError as exc:
                raise HTTPException(422, f"malformed edit: missing {exc}") from exc
            try:
                session.engine.answer(edits, set(req.deselected))
            except (DisambiguationError, AdaptationError) as exc:
                raise HTTPException(422, f"invalid edits: {exc}") from exc
            session._persist()
            report = next((e for e in reversed(session.engine.events)
                           if e["type"] == "adaptation"), None)
        return {"state": session.state, "adaptation": report}

    @app.get("/sessions/{sid}/hierarchy")
    def hierarchy(sid: str):
        return get_session(sid).engine.machine_h.to_json()

    return app


app = create_app()
