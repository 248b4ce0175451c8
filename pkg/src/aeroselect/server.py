"""WebSocket message channel and report endpoints.

``build_app`` returns a FastAPI application hosting one shared game
session.  Connected clients drive it with JSON messages and every
client observes the same ordered event stream: each outbound message
carries a globally increasing ``seq``, assigned once at publish time,
so two subscribers see identical streams.

Outbound messages ride bounded per-subscriber queues; a slow consumer
loses display events rather than stalling the loop.  Trial records do
not take that path: they are written to the session log synchronously
while the event is handled, so a dropped message never loses data.
"""

from __future__ import annotations

import asyncio
import json
import socket
import time
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from .config import ConfigError, ServiceConfig
from .game import (
    AvatarChosen,
    CinematicDone,
    Continue,
    GameState,
    NameEntered,
    PersistRecord,
    Phase,
    Quit,
    ScenarioChosen,
    Selection,
    SessionInfo,
    Tick,
    UiMessage,
    advance,
    new_game,
    state_snapshot,
)
from .locate import DwellSelector, position_to_cell, ranges_to_position
from .report import MEASURE_LABELS
from .stats import compare_groups
from .store import SessionStore, LogHeader, SessionWriter, StorageFailure
from .wire import FrameDecoder

__all__ = ["BindError", "QUEUE_LIMIT", "build_app", "serve_ui"]

QUEUE_LIMIT = 256


class BindError(RuntimeError):
    """The configured listen address is unavailable."""


class SessionHub:
    """Shared session state plus the subscriber fan-out."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.geometry = config.load_geometry()
        self.store = SessionStore(config.ensure_data_dir())
        self.lock = asyncio.Lock()
        self.subscribers: list[asyncio.Queue] = []
        self.seq = 0
        self.dropped_messages = 0
        self.state: Optional[GameState] = None
        self.writer: Optional[SessionWriter] = None
        self.decoder = FrameDecoder()
        self.selector = DwellSelector(config.dwell_config())
        self.clock_ms = 0.0
        self.last_seq: Optional[int] = None

    # -- fan-out ---------------------------------------------------

    def subscribe(self) -> asyncio.Queue:
        queue: asyncio.Queue = asyncio.Queue(maxsize=QUEUE_LIMIT)
        self.subscribers.append(queue)
        return queue

    def unsubscribe(self, queue: asyncio.Queue) -> None:
        if queue in self.subscribers:
            self.subscribers.remove(queue)

    def _envelope(self, type_: str, payload: dict) -> str:
        self.seq += 1
        return json.dumps(
            {"type": type_, "seq": self.seq, "payload": payload}, sort_keys=True
        )

    def _offer(self, queue: asyncio.Queue, message: str) -> None:
        try:
            queue.put_nowait(message)
        except asyncio.QueueFull:
            # Display traffic is droppable (records were persisted
            # before the message was built); evict the oldest entry so
            # a stalled consumer still converges on the latest state.
            try:
                queue.get_nowait()
            except asyncio.QueueEmpty:
                pass
            queue.put_nowait(message)
            self.dropped_messages += 1

    def publish(self, type_: str, payload: dict) -> None:
        message = self._envelope(type_, payload)
        for queue in list(self.subscribers):
            self._offer(queue, message)

    def send_to(self, queue: asyncio.Queue, type_: str, payload: dict) -> None:
        self._offer(queue, self._envelope(type_, payload))

    # -- session plumbing ------------------------------------------

    def _handle_effects(self, effects) -> None:
        for effect in effects:
            if isinstance(effect, PersistRecord):
                if self.writer is not None:
                    self.writer.append_record(effect.record)
                self.publish("record_saved", effect.record.to_dict())
            elif isinstance(effect, UiMessage):
                self.publish(effect.kind, dict(effect.payload))

    def _advance(self, event) -> None:
        assert self.state is not None
        self.state, effects = advance(self.state, event)
        self._handle_effects(effects)

    def _publish_state(self) -> None:
        if self.state is not None:
            self.publish("game_state", state_snapshot(self.state))

    def close_session(self) -> None:
        if self.state is not None and self.state.phase is not Phase.AWAIT_LOGIN:
            self._advance(Quit())
        if self.writer is not None:
            self.writer.close()
            self.writer = None

    # -- inbound handlers ------------------------------------------

    def start_session(self, payload: dict) -> None:
        self.close_session()
        info = SessionInfo(
            player_id=str(payload["player_id"]),
            group=str(payload["group"]),
            method=str(payload["method"]),
            session_index=int(payload["session_index"]),
        )
        header = LogHeader(
            player_id=info.player_id,
            group=info.group,
            method=info.method,
            session_index=info.session_index,
            started_at_epoch_s=float(payload.get("epoch_s", time.time())),
            config=self.config.snapshot(),
        )
        self.writer = self.store.open_writer(
            header, overwrite=bool(payload.get("overwrite", False))
        )
        self.state = new_game(info)
        self.decoder = FrameDecoder()
        self.selector = DwellSelector(self.config.dwell_config())
        self.clock_ms = 0.0
        self.last_seq = None
        self.publish("session_started", {"player_id": info.player_id})

    def choose_avatar(self, payload: dict) -> None:
        self._require_session()
        self._advance(AvatarChosen(int(payload["avatar_id"])))
        name = str(payload.get("name") or self.state.session.player_id)
        self._advance(NameEntered(name))

    def choose_scenario(self, payload: dict) -> None:
        self._require_session()
        # The menu is reachable from the intro and the result screens;
        # picking a scenario fast-forwards whichever one is showing.
        if self.state.phase is Phase.CINEMATIC:
            self._advance(CinematicDone())
        while self.state.phase in (Phase.ROUND_RESULT, Phase.FEEDBACK):
            self._advance(Continue())
        level = str(payload["level"])
        layout_seed = int(payload.get("layout_seed", 0))
        self._advance(
            ScenarioChosen(level, layout_seed, self.config.time_limit_for(level))
        )

    def advance_result(self) -> None:
        self._require_session()
        self._advance(Continue())

    def quit(self) -> None:
        self._require_session()
        self.close_session()

    async def process_frames(self, data: bytes) -> None:
        self._require_session()
        interval_ms = 1000.0 / self.config.rate_hz
        for frame in self.decoder.feed(data):
            if self.last_seq is None:
                t = 0.0
            else:
                t = self.clock_ms + max((frame.seq - self.last_seq) % 256, 1) * interval_ms
            self.last_seq = frame.seq
            self.clock_ms = t

            estimate = ranges_to_position(frame, self.geometry)
            cell = position_to_cell(
                estimate, self.geometry, reject_residual_mm=self.config.reject_residual_mm
            )
            self.publish(
                "hand_estimate",
                {
                    "t_ms": t,
                    "x_mm": estimate.position_mm[0],
                    "y_mm": estimate.position_mm[1],
                    "residual_mm": estimate.residual_mm,
                    "in_bounds": estimate.in_bounds,
                    "cell": None if cell is None else cell.index,
                },
            )
            self._advance(Tick(t))
            selection = self.selector.step(cell, t)
            if selection is not None:
                if self.writer is not None:
                    self.writer.append_event(selection)
                if self.state.phase is Phase.IN_ROUND:
                    self._advance(Selection(selection))
            self._publish_state()
            # Let the per-subscriber senders drain between frames so a
            # large chunk does not overflow their queues in one burst.
            await asyncio.sleep(0)

    def _require_session(self) -> None:
        if self.state is None:
            raise ValueError("no active session; send start_session first")

    async def dispatch(self, queue: asyncio.Queue, raw: str) -> None:
        try:
            message = json.loads(raw)
        except json.JSONDecodeError as exc:
            self.send_to(queue, "error", {"message": f"invalid JSON: {exc.msg}"})
            return
        if not isinstance(message, dict) or not isinstance(message.get("type"), str):
            self.send_to(queue, "error", {"message": "expected {type, payload}"})
            return
        payload = message.get("payload") or {}
        if not isinstance(payload, dict):
            self.send_to(queue, "error", {"message": "payload must be an object"})
            return

        async with self.lock:
            try:
                kind = message["type"]
                if kind == "start_session":
                    self.start_session(payload)
                elif kind == "choose_avatar":
                    self.choose_avatar(payload)
                elif kind == "choose_scenario":
                    self.choose_scenario(payload)
                elif kind == "continue":
                    self.advance_result()
                elif kind == "quit":
                    self.quit()
                elif kind == "resync":
                    # Reconnecting clients ask for a fresh snapshot;
                    # reply only to the requester so the broadcast
                    # stream stays identical for every subscriber.
                    payload = (
                        {"phase": None}
                        if self.state is None
                        else state_snapshot(self.state)
                    )
                    self.send_to(queue, "game_state", payload)
                    return
                elif kind == "sensor_chunk":
                    await self.process_frames(bytes.fromhex(payload.get("hex", "")))
                    return  # frame loop already published state
                else:
                    self.send_to(queue, "error", {"message": f"unknown type: {kind}"})
                    return
                self._publish_state()
            except (StorageFailure, ConfigError, KeyError, ValueError) as exc:
                self.send_to(queue, "error", {"message": f"{type(exc).__name__}: {exc}"})


async def _pump(websocket: WebSocket, queue: asyncio.Queue) -> None:
    while True:
        await websocket.send_text(await queue.get())


def build_app(config: ServiceConfig, ui_dir: Optional[str] = None) -> FastAPI:
    """Assemble the service: WS channel, report API, optional static UI."""
    hub = SessionHub(config)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        hub.close_session()

    app = FastAPI(lifespan=lifespan)
    app.state.hub = hub

    @app.websocket("/ws")
    async def channel(websocket: WebSocket) -> None:
        await websocket.accept()
        queue = hub.subscribe()
        sender = asyncio.create_task(_pump(websocket, queue))
        try:
            while True:
                raw = await websocket.receive_text()
                await hub.dispatch(queue, raw)
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            hub.unsubscribe(queue)

    @app.get("/api/health")
    def health() -> dict:
        return {
            "status": "ok",
            "subscribers": len(hub.subscribers),
            "session_active": hub.state is not None,
        }

    @app.get("/api/records")
    def records(
        group: Optional[str] = None,
        method: Optional[str] = None,
        player_id: Optional[str] = None,
        session_index: Optional[int] = None,
    ) -> list[dict]:
        rows = hub.store.query(
            group=group,
            method=method,
            player_id=player_id,
            session_index=session_index,
        )
        return [record.to_dict() for record in rows]

    @app.get("/api/report")
    def report(measure: str = "time", alpha: float = 0.05) -> dict:
        if measure not in MEASURE_LABELS:
            raise HTTPException(
                status_code=400,
                detail=f"measure must be one of {sorted(MEASURE_LABELS)}",
            )
        field, _ = MEASURE_LABELS[measure]
        rows = hub.store.read_all()
        try:
            comparison = compare_groups(rows, field, alpha=alpha)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return comparison.to_dict()

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve_ui(config: ServiceConfig, ui_dir: Optional[str] = None) -> None:
    """Run the service on the configured address; blocks until stopped."""
    import uvicorn

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((config.listen_host, config.listen_port))
    except OSError as exc:
        raise BindError(
            f"cannot listen on {config.listen_host}:{config.listen_port}: {exc}"
        ) from exc
    finally:
        probe.close()

    app = build_app(config, ui_dir=ui_dir)
    uvicorn.run(
        app, host=config.listen_host, port=config.listen_port, log_level="warning"
    )
