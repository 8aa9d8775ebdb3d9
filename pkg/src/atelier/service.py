"""HTTP + WebSocket service around sessions, completion, captures, and
calibration.

Sessions are durable: every mutation appends its events to the
session's JSON-Lines journal under the data directory, and a restarted
service replays those files back into memory. Mutations are serialized
per session with a lock (single writer); snapshots are read without
locking since session values are immutable.

The event stream at ``/sessions/{id}/events`` is a WebSocket that
pushes ``{event, round, payload}`` for every journal entry from the
requested offset onward, then keeps tailing the journal.

(No ``from __future__ import annotations`` here: FastAPI must see real
annotation objects on the endpoint signatures to build request bodies.)
"""

import asyncio
import io
import json
import os
import threading
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Request, UploadFile, File, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from . import session as game
from .calibration import CalibrationRig, CalibrationSet, Homography, solve_homography
from .errors import (
    AtelierError,
    CheckpointError,
    InvalidInput,
    NotFound,
)
from .render import render_suggestion_overlay, sketch_to_svg
from .sketcher.engine import SketcherEngine
from .strokes import (
    DEFAULT_CANVAS_MM,
    DEFAULT_TURN_ORDER,
    PlayerChannel,
    Sketch,
    sketch_from_json,
)
from .vision import ColorPalette, default_palette, extract_new_strokes

_STATUS_BY_CODE = {
    "not_found": 404,
    "invalid_input": 400,
    "parse_error": 400,
    "turn_violation": 409,
    "channel_mismatch": 409,
    "session_closed": 409,
    "pending_suggestion_exists": 409,
    "no_pending_suggestion": 409,
    "empty_context": 409,
    "not_a_voter": 409,
    "degenerate_calibration": 400,
    "checkpoint_error": 500,
    "replay_error": 500,
}


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    checkpoint_path: str | None = None
    data_dir: str = "./atelier-data"
    calibration_path: str | None = None
    palette: ColorPalette | None = None
    px_per_mm: float = 0.5  # overlay scale when no projector calibration exists
    projector_size: tuple[int, int] = (1920, 1080)
    log_level: str = "info"


class SessionStore:
    """In-memory sessions backed by journal files, one lock per session."""

    def __init__(self, data_dir: str):
        self.data_dir = data_dir
        os.makedirs(data_dir, exist_ok=True)
        self.sessions: dict[str, game.Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._global = threading.Lock()
        for name in sorted(os.listdir(data_dir)):
            if name.endswith(".jsonl"):
                session = game.load_session(os.path.join(data_dir, name))
                self.sessions[session.id] = session

    def _journal_path(self, session_id: str) -> str:
        return os.path.join(self.data_dir, f"{session_id}.jsonl")

    def lock(self, session_id: str) -> threading.Lock:
        with self._global:
            return self._locks.setdefault(session_id, threading.Lock())

    def get(self, session_id: str) -> game.Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise NotFound(f"no session {session_id}")
        return session

    def put(self, before: game.Session | None, after: game.Session) -> None:
        """Store the new state and append the delta events to the journal."""
        known = len(before.journal) if before is not None else 0
        new_events = after.journal[known:]
        game.append_journal(self._journal_path(after.id), new_events)
        self.sessions[after.id] = after


def create_app(
    config: ServiceConfig | None = None,
    engine: SketcherEngine | None = None,
    store: SessionStore | None = None,
    rig: CalibrationRig | None = None,
) -> FastAPI:
    config = config or ServiceConfig()
    if engine is None:
        if config.checkpoint_path:
            engine = SketcherEngine.from_checkpoint(config.checkpoint_path)
        else:
            raise CheckpointError("service needs a model checkpoint")
    store = store or SessionStore(config.data_dir)
    palette = config.palette or default_palette()
    if rig is None:
        rig = CalibrationRig()
        if config.calibration_path and os.path.exists(config.calibration_path):
            rig = CalibrationRig.load(config.calibration_path)

    app = FastAPI(title="atelier", version="0.1.0")
    app.state.store = store
    app.state.engine = engine
    app.state.rig = rig
    app.state.config = config

    @app.exception_handler(AtelierError)
    async def atelier_error_handler(request: Request, exc: AtelierError):
        status = _STATUS_BY_CODE.get(exc.code, 400)
        return JSONResponse(
            status_code=status,
            content={"code": exc.code, "message": str(exc), "detail": exc.detail},
        )

    class CreateSessionBody(BaseModel):
        theme: dict
        canvas: list[float] | None = None
        turn_order: list[str] | None = None
        id: str | None = None

    class StrokesBody(BaseModel):
        player: str
        sketch: dict

    class CompleteBody(BaseModel):
        policy: str | dict = "emitter"
        amount: int = 1
        temperature: float = 0.5
        seed: int = 0

    class ResolveBody(BaseModel):
        decision: str
        sketch: dict | None = None

    class ConsensusBody(BaseModel):
        player: str

    class CalibrationBody(BaseModel):
        src_frame: str
        dst_frame: str
        src: list[list[float]]
        dst: list[list[float]]

    def _mutate(session_id: str, fn):
        with store.lock(session_id):
            before = store.get(session_id)
            after = fn(before)
            store.put(before, after)
            return after

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "sessions": len(store.sessions),
            "checkpoint": engine.checkpoint_id,
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        theme = sketch_from_json(body.theme)
        canvas = tuple(body.canvas) if body.canvas else theme.canvas_size
        order = (
            tuple(PlayerChannel(c) for c in body.turn_order)
            if body.turn_order
            else DEFAULT_TURN_ORDER
        )
        session = game.create_session(
            theme, canvas_size=canvas, turn_order=order, session_id=body.id
        )
        with store.lock(session.id):
            if session.id in store.sessions:
                raise InvalidInput(f"session {session.id} already exists")
            store.put(None, session)
        return game.session_snapshot(session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return game.session_snapshot(store.get(session_id))

    @app.post("/sessions/{session_id}/strokes")
    def post_strokes(session_id: str, body: StrokesBody):
        player = PlayerChannel(body.player)
        sketch = sketch_from_json(body.sketch)
        after = _mutate(session_id, lambda s: game.submit_strokes(s, player, sketch))
        return game.session_snapshot(after)

    @app.post("/sessions/{session_id}/complete")
    def post_complete(session_id: str, body: CompleteBody):
        policy = game.CompletionPolicy.from_json(body.policy)
        result = {}

        def run(before):
            after, suggestion = game.request_completion(
                before, policy, body.amount, body.temperature, body.seed, engine
            )
            result["suggestion"] = suggestion
            result["after"] = after
            return after

        after = _mutate(session_id, run)
        pending = after.pending
        return {
            "suggestion": result["suggestion"].to_json(),
            "sketch": game.sketch_to_json(pending.decoded),
            "policy": pending.policy.to_json(),
            "checkpoint_id": pending.checkpoint_id,
            "state": game.session_snapshot(after),
        }

    @app.post("/sessions/{session_id}/resolve")
    def post_resolve(session_id: str, body: ResolveBody):
        modified = sketch_from_json(body.sketch) if body.sketch else None
        after = _mutate(
            session_id, lambda s: game.resolve_suggestion(s, body.decision, modified)
        )
        return game.session_snapshot(after)

    @app.post("/sessions/{session_id}/consensus")
    def post_consensus(session_id: str, body: ConsensusBody):
        player = PlayerChannel(body.player)
        after = _mutate(session_id, lambda s: game.signal_consensus(s, player))
        return game.session_snapshot(after)

    @app.get("/sessions/{session_id}/stats")
    def get_stats(session_id: str):
        stats = game.contribution_stats(store.get(session_id))
        return {channel.value: s.to_json() for channel, s in stats.items()}

    @app.get("/sessions/{session_id}/suggestion.png")
    def get_suggestion_png(session_id: str):
        session = store.get(session_id)
        if session.pending is None:
            raise NotFound("no pending suggestion")
        decoded = session.pending.decoded
        if rig.has_map("canvas", "projector"):
            mm_to_px = rig.get("canvas", "projector")
            size = config.projector_size
        else:
            scale = config.px_per_mm
            mm_to_px = Homography.scale(scale)
            size = (
                int(round(session.canvas_size[0] * scale)),
                int(round(session.canvas_size[1] * scale)),
            )
        overlay = render_suggestion_overlay(decoded, mm_to_px, size)
        from PIL import Image

        buf = io.BytesIO()
        Image.fromarray(overlay).save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.get("/sessions/{session_id}/export.svg")
    def get_export_svg(session_id: str):
        session = store.get(session_id)
        return Response(
            content=sketch_to_svg(session.sketch()), media_type="image/svg+xml"
        )

    @app.post("/sessions/{session_id}/capture")
    def post_capture(session_id: str, file: UploadFile = File(...)):
        from PIL import Image

        raw = file.file.read()
        try:
            img = np.asarray(Image.open(io.BytesIO(raw)).convert("RGB"))
        except Exception as exc:
            raise InvalidInput(f"unreadable capture image: {exc}") from exc
        calib = (
            rig.get("camera", "canvas") if rig.has_map("camera", "canvas") else None
        )

        report = {}

        def run(before):
            delta = extract_new_strokes(before.sketch(), img, palette, calib)
            report["recovered"] = len(delta.strokes)
            if not delta.strokes:
                raise InvalidInput("capture contained no new strokes")
            player = before.expected_player
            after = game.submit_strokes(before, player, delta)
            report["player"] = player.value
            return after

        after = _mutate(session_id, run)
        return {"report": report, "state": game.session_snapshot(after)}

    @app.post("/calibration")
    def post_calibration(body: CalibrationBody):
        cal = CalibrationSet(
            np.asarray(body.src), np.asarray(body.dst), body.src_frame, body.dst_frame
        )
        h = solve_homography(cal)
        from .calibration import reprojection_rmse

        rmse = reprojection_rmse(h, cal)
        rig.set_map(body.src_frame, body.dst_frame, h, rmse)
        if config.calibration_path:
            rig.save(config.calibration_path)
        return {
            "src_frame": body.src_frame,
            "dst_frame": body.dst_frame,
            "matrix": [float(v) for v in h.matrix.flatten()],
            "rmse": rmse,
        }

    @app.websocket("/sessions/{session_id}/events")
    async def events_stream(websocket: WebSocket, session_id: str, since: int = 0):
        await websocket.accept()
        cursor = max(0, since)
        try:
            while True:
                session = store.sessions.get(session_id)
                if session is None:
                    await websocket.send_json({"error": f"no session {session_id}"})
                    await websocket.close()
                    return
                journal = session.journal
                while cursor < len(journal):
                    event = journal[cursor]
                    await websocket.send_json(
                        {
                            "event": event.type,
                            "round": event.round_index,
                            "seq": event.seq,
                            "payload": event.payload,
                        }
                    )
                    cursor += 1
                try:
                    # drain pings without blocking the tail loop
                    await asyncio.wait_for(websocket.receive_text(), timeout=0.05)
                except asyncio.TimeoutError:
                    pass
        except WebSocketDisconnect:
            return

    return app


def run_service(config: ServiceConfig) -> None:
    """Blocking entry point used by the CLI ``serve`` command."""
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level=config.log_level)
