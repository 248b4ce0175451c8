"""End-to-end session loop: sensor bytes in, session log out.

``run_session`` wires the whole station together: it decodes the frame
stream, localizes each frame to a board position, runs dwell selection,
feeds committed selections into the game machine, and persists records
and telemetry.  The session clock is virtual: it advances with frame
sequence numbers at the configured rate, never with wall time, so a
replayed byte stream always produces the identical log.

The login and scenario choices are scripted from the call parameters;
the loop plays rounds until the configured round budget is met or the
byte source ends, in which case a partial round is flushed with its
record flagged incomplete.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from .config import ServiceConfig
from .game import (
    AvatarChosen,
    CinematicDone,
    Continue,
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
from .store import LogHeader, SessionStore
from .wire import FrameDecoder, SensorGeometry

__all__ = [
    "InputClosed",
    "SessionSummary",
    "perfect_hover_waypoints",
    "run_session",
]

EffectSink = Callable[[str, dict], None]


class InputClosed(RuntimeError):
    """Raised by live byte sources that lose their device.

    The session loop treats it as end-of-input: the running round is
    flushed as incomplete and the log is finalized normally.
    """


@dataclass(frozen=True)
class SessionSummary:
    """Counts describing one completed session run."""

    frames: int
    checksum_drops: int
    range_drops: int
    seq_gaps: int
    estimates: int
    selections: int
    successes: int
    failures: int
    records_written: int
    rounds_completed: int
    final_phase: str
    log_path: str


def perfect_hover_waypoints(
    layout, geometry: SensorGeometry, *, hover_ms: float = 1500.0, travel_ms: float = 300.0
) -> list[tuple[float, float, float]]:
    """Trajectory that hovers each target's cell in presentation order.

    Long enough on every cell for one dwell commit (and short enough
    between cells that nothing else commits); useful as a demo input
    and as the scripted replay fixture.
    """
    cell_w = geometry.board_width_mm / 3.0
    cell_h = geometry.board_height_mm / 3.0
    waypoints: list[tuple[float, float, float]] = []
    t = 0.0
    for char_id in layout.target_order:
        cell_index = layout.cell_of(char_id)
        row, col = divmod(cell_index, 3)
        x = (col + 0.5) * cell_w
        y = (row + 0.5) * cell_h
        if waypoints:
            t += travel_ms
        waypoints.append((t, x, y))
        t += hover_ms
        waypoints.append((t, x, y))
    return waypoints


def run_session(
    config: ServiceConfig,
    source: Iterable[bytes],
    session: SessionInfo,
    *,
    level: str = "Beginner",
    avatar_id: int = 0,
    layout_seed: int = 0,
    epoch_s: float = 0.0,
    max_rounds: Optional[int] = 1,
    overwrite_log: bool = False,
    on_effect: Optional[EffectSink] = None,
) -> SessionSummary:
    """Drive a full session from a byte source; returns run counts."""
    geometry = config.load_geometry()
    store = SessionStore(config.ensure_data_dir())
    header = LogHeader(
        player_id=session.player_id,
        group=session.group,
        method=session.method,
        session_index=session.session_index,
        started_at_epoch_s=epoch_s,
        config={
            **config.snapshot(),
            "level": level,
            "layout_seed": layout_seed,
            "avatar_id": avatar_id,
        },
    )
    writer = store.open_writer(header, overwrite=overwrite_log)

    decoder = FrameDecoder()
    selector = DwellSelector(config.dwell_config())
    emit: EffectSink = on_effect if on_effect is not None else (lambda kind, payload: None)

    estimates = 0
    selections = 0
    successes = 0
    failures = 0
    records_written = 0
    rounds_completed = 0

    def handle_effects(effects) -> None:
        nonlocal records_written
        for eff in effects:
            if isinstance(eff, PersistRecord):
                writer.append_record(eff.record)
                records_written += 1
            elif isinstance(eff, UiMessage):
                emit(eff.kind, dict(eff.payload))

    state = new_game(session)
    script = (
        AvatarChosen(avatar_id),
        NameEntered(session.player_id),
        CinematicDone(),
        ScenarioChosen(level, layout_seed, config.time_limit_for(level)),
    )
    for event in script:
        state, effects = advance(state, event)
        handle_effects(effects)

    interval_ms = 1000.0 / config.rate_hz
    clock_ms = 0.0
    last_seq: Optional[int] = None
    done = False

    try:
        for chunk in source:
            for frame in decoder.feed(chunk):
                # Virtual clock: sequence numbers carry the cadence, so
                # dropped frames still advance time.
                if last_seq is None:
                    t = 0.0
                else:
                    t = clock_ms + max((frame.seq - last_seq) % 256, 1) * interval_ms
                last_seq = frame.seq
                clock_ms = t

                estimate = ranges_to_position(frame, geometry)
                estimates += 1
                cell = position_to_cell(
                    estimate, geometry, reject_residual_mm=config.reject_residual_mm
                )
                emit(
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

                state, effects = advance(state, Tick(t))
                handle_effects(effects)

                selection = selector.step(cell, t)
                if selection is not None:
                    writer.append_event(selection)
                    if state.phase is Phase.IN_ROUND:
                        selections += 1
                        before = state.round
                        state, effects = advance(state, Selection(selection))
                        handle_effects(effects)
                        after = state.round
                        if after is not None and before is not None:
                            successes += after.successes - before.successes
                            failures += after.failures - before.failures

                emit("game_state", state_snapshot(state))

                if state.phase is Phase.ROUND_RESULT:
                    rounds_completed += 1
                    if max_rounds is not None and rounds_completed >= max_rounds:
                        done = True
                        break
                    # Acknowledge results and start the next round.
                    for event in (
                        Continue(),
                        Continue(),
                        ScenarioChosen(
                            level,
                            layout_seed + rounds_completed,
                            config.time_limit_for(level),
                        ),
                    ):
                        state, effects = advance(state, event)
                        handle_effects(effects)
            if done:
                break
    except InputClosed:
        pass
    finally:
        try:
            if state.phase is Phase.IN_ROUND:
                # Source ended mid-round: flush the partial attempt.
                state, effects = advance(state, Quit())
                handle_effects(effects)
        finally:
            writer.close()

    return SessionSummary(
        frames=decoder.frames_accepted,
        checksum_drops=decoder.checksum_drops,
        range_drops=decoder.range_drops,
        seq_gaps=decoder.seq_gaps,
        estimates=estimates,
        selections=selections,
        successes=successes,
        failures=failures,
        records_written=records_written,
        rounds_completed=rounds_completed,
        final_phase=state.phase.value,
        log_path=str(writer.path),
    )
