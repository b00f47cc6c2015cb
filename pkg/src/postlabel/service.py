"""HTTP/WebSocket service around a labeling session.

Transport adds no behavior: frames and events pass through the session
engine unchanged, and every applied event is recorded with the session
clock so the run can be replayed offline to the same final checkpoint.

Endpoints:
    WS  /session   server -> client {"kind": "frame", ...} JSON messages at
                   the session display interval; client -> server
                   {"kind": "event", ...}. The first connection is the
                   labeling client; later connections receive frames
                   read-only.
    GET /status    counters, elapsed labeling seconds, config snapshot.
    POST /stop     finalize: write frame log, checkpoint, event script.

The session only advances while at least one client is connected, so a
slow client slows the session instead of desynchronizing it.
"""

from __future__ import annotations

import asyncio
import base64
import math
from contextlib import asynccontextmanager
from dataclasses import asdict

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .checkpoint import save_checkpoint
from .session import (
    EVENT_SET_LABEL,
    EVENT_SET_SPEED,
    SessionEvent,
    SessionState,
    apply_event,
    next_frame,
    stop as stop_event,
    write_event_script,
    write_frame_log,
)

_WIRE_EVENT_KINDS = {
    "set_label",
    "set_unsure",
    "set_speed",
    "toggle_autospeed",
    "toggle_skip_if_sure",
    "stop",
}


def quantize_pixels(probs: np.ndarray) -> bytes:
    """Visible probabilities to one byte per pixel, round(p * 255)."""
    return np.rint(np.asarray(probs) * 255).astype(np.uint8).tobytes()


def _frame_geometry(n_visible: int) -> tuple[int, int]:
    side = math.isqrt(n_visible)
    if side * side == n_visible:
        return side, side
    return n_visible, 1


class SessionService:
    """Owns the session state and the single frame-emitting event loop."""

    def __init__(
        self,
        state: SessionState,
        out_frames=None,
        out_ckpt=None,
        out_events=None,
        pacing: bool = True,
    ):
        self.state = state
        self.out_frames = out_frames
        self.out_ckpt = out_ckpt
        self.out_events = out_events
        self.pacing = pacing
        self.width, self.height = _frame_geometry(state.model.n_visible)
        self.clients: list[WebSocket] = []
        self.labeler: WebSocket | None = None
        self.applied_events: list[dict] = []
        self.event_queue: asyncio.Queue = asyncio.Queue()
        self._wake = asyncio.Event()
        self.outputs_written = False

    # -- engine side --------------------------------------------------

    def _apply(self, event: SessionEvent) -> None:
        apply_event(self.state, event)
        self.applied_events.append(
            {"t_ms": self.state.clock_ms, "event": event.kind, "arg": event.arg}
        )

    def _drain_events(self) -> None:
        while not self.event_queue.empty():
            self._apply(self.event_queue.get_nowait())

    async def run(self) -> None:
        while not self.state.stopped:
            if not self.clients:
                self._wake.clear()
                await self._wake.wait()
                continue
            self._drain_events()
            if self.state.stopped:
                break
            frame, interval = next_frame(self.state)
            message = self._wire_frame(frame, interval)
            await self._broadcast(message)
            if self.pacing:
                await asyncio.sleep(interval)

    def _wire_frame(self, frame, interval: float) -> dict:
        return {
            "kind": "frame",
            "frame_id": frame.frame_id,
            "width": self.width,
            "height": self.height,
            "pixels": base64.b64encode(quantize_pixels(frame.visible_probs)).decode(),
            "label_probs": [float(p) for p in frame.label_probs],
            "fps": 1.0 / interval,
            "active_label": self.state.active_label,
            "counters": self.state.counters(),
            "elapsed_seconds": self.state.clock_ms / 1000.0,
        }

    async def _broadcast(self, message: dict) -> None:
        dead = []
        for ws in self.clients:
            try:
                await ws.send_json(message)
            except Exception:
                dead.append(ws)
        for ws in dead:
            self._detach(ws)

    # -- transport side -------------------------------------------------

    def attach(self, ws: WebSocket) -> str:
        self.clients.append(ws)
        role = "observer"
        if self.labeler is None:
            self.labeler = ws
            role = "labeler"
        self._wake.set()
        return role

    def _detach(self, ws: WebSocket) -> None:
        if ws in self.clients:
            self.clients.remove(ws)
        if self.labeler is ws:
            self.labeler = None

    def parse_wire_event(self, raw: dict) -> SessionEvent:
        kind = raw.get("event")
        if kind not in _WIRE_EVENT_KINDS:
            raise ValueError(f"unknown event {kind!r}")
        arg = raw.get("arg")
        if kind == EVENT_SET_LABEL:
            if not isinstance(arg, int) or not 0 <= arg < self.state.model.n_labels:
                raise ValueError(f"label argument {arg!r} out of range")
        if kind == EVENT_SET_SPEED and not isinstance(arg, (int, float)):
            raise ValueError("set_speed needs a numeric argument")
        return SessionEvent(kind, arg)

    def status(self) -> dict:
        state = self.state
        cfg = state.cfg
        return {
            **state.counters(),
            "elapsed_seconds": state.clock_ms / 1000.0,
            "active_label": state.active_label,
            "stopped": state.stopped,
            "skip_if_sure_reminder": (
                not cfg.skip_if_sure_enabled
                and state.clock_ms / 1000.0 >= cfg.warmup_reminder_s
            ),
            "config": asdict(cfg),
        }

    def finalize(self) -> dict:
        """Stop the session and write the configured outputs once."""
        if not self.state.stopped:
            self._drain_events()
            self._apply(stop_event())
        self._wake.set()
        result = {
            "frames_shown": self.state.frames_shown,
            "elapsed_seconds": self.state.clock_ms / 1000.0,
            "counters": self.state.counters(),
        }
        if not self.outputs_written:
            m = self.state.model
            if self.out_frames:
                count = write_frame_log(
                    self.out_frames,
                    self.state.frame_log,
                    m.n_visible,
                    m.n_hidden,
                    m.n_labels,
                )
                result["frames_written"] = count
                result["frame_log"] = str(self.out_frames)
            if self.out_ckpt:
                save_checkpoint(
                    self.out_ckpt,
                    m,
                    {"kind": "session", "counters": self.state.counters()},
                )
                result["checkpoint"] = str(self.out_ckpt)
            if self.out_events:
                write_event_script(self.out_events, self.applied_events)
                result["event_script"] = str(self.out_events)
            self.outputs_written = True
        return result


def create_app(service: SessionService, ui_dir=None) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        task = asyncio.create_task(service.run())
        yield
        service.state.stopped = True
        service._wake.set()
        task.cancel()
        try:
            await task
        except asyncio.CancelledError:
            pass

    app = FastAPI(lifespan=lifespan)

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.websocket("/session")
    async def session_socket(ws: WebSocket):
        await ws.accept()
        role = service.attach(ws)
        await ws.send_json(
            {
                "kind": "status",
                "role": role,
                "width": service.width,
                "height": service.height,
                "n_labels": service.state.model.n_labels,
                **service.status(),
            }
        )
        try:
            while True:
                raw = await ws.receive_json()
                if raw.get("kind") != "event":
                    await ws.send_json(
                        {"kind": "error", "message": "expected an event message"}
                    )
                    continue
                if service.labeler is not ws:
                    await ws.send_json(
                        {"kind": "error", "message": "read-only connection"}
                    )
                    continue
                try:
                    event = service.parse_wire_event(raw)
                except ValueError as e:
                    await ws.send_json({"kind": "error", "message": str(e)})
                    continue
                service.event_queue.put_nowait(event)
        except WebSocketDisconnect:
            pass
        finally:
            service._detach(ws)

    @app.get("/status")
    def status():
        return service.status()

    @app.post("/stop")
    def stop():
        return service.finalize()

    return app


def serve(service: SessionService, host: str, port: int, ui_dir=None) -> None:
    """Run the service under uvicorn (blocking)."""
    import uvicorn

    uvicorn.run(
        create_app(service, ui_dir=ui_dir), host=host, port=port, log_level="warning"
    )
