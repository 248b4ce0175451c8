"""Hand localization: range trilateration, 3x3 grid mapping, dwell selection.

The solver seeds from the linear system obtained by subtracting the first
circle equation from the other two, then applies a single damped
Gauss-Newton step on the nonlinear range residual.  With the sensors on one
board edge that linear system is rank-1 (it only fixes the along-edge
coordinate), so the seed completes the cross-edge coordinate from the circle
equations directly, picking the root that lands on the board side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .wire import RangeFrame, SensorGeometry

_RANK_RCOND = 1e-9


class ClockRegression(ValueError):
    """Timestamps fed to the dwell automaton went backwards."""


@dataclass(frozen=True)
class HandEstimate:
    """2-D board-plane fix for one frame."""

    position_mm: tuple[float, float]
    residual_mm: float
    in_bounds: bool
    source_seq: int


@dataclass(frozen=True)
class GridCell:
    row: int
    col: int

    def __post_init__(self):
        if not (0 <= self.row <= 2 and 0 <= self.col <= 2):
            raise ValueError(f"cell ({self.row}, {self.col}) outside the 3x3 grid")

    @property
    def index(self) -> int:
        return self.row * 3 + self.col

    @classmethod
    def from_index(cls, index: int) -> "GridCell":
        return cls(row=index // 3, col=index % 3)


@dataclass(frozen=True)
class SelectionEvent:
    """A committed air selection (stable hover past the dwell threshold)."""

    cell: GridCell
    committed_at_ms: float
    dwell_ms: float


def _seed_positions(d: np.ndarray, geometry: SensorGeometry) -> np.ndarray:
    """Linear seed for a batch of range triples ``d`` of shape (N, 3)."""
    sensors = geometry.sensor_array
    a = 2.0 * (sensors[1:] - sensors[0])  # 2x2 difference-system matrix
    norms_sq = np.sum(sensors**2, axis=1)
    b = (d[:, :1] ** 2 - d[:, 1:] ** 2) + (norms_sq[1:] - norms_sq[0])  # (N, 2)

    sing = np.linalg.svd(a, compute_uv=False)
    if sing[1] > _RANK_RCOND * sing[0]:
        return b @ np.linalg.pinv(a).T

    # Rank-1: the difference equations fix only the row-space coordinate.
    # Solve it by explicit normal equations along the dominant row direction
    # (not via pinv: that routes exact axis-aligned inputs through irrational
    # singular values, and the circle completion below amplifies any along-
    # edge rounding through a square root).
    rows = a
    v = rows[np.argmax(np.linalg.norm(rows, axis=1))]
    v = v / np.linalg.norm(v)
    alpha = rows @ v  # (2,)
    coord = (b @ alpha) / (alpha @ alpha)  # (N,)
    x_r = coord[:, None] * v[None, :]
    null = np.array([-v[1], v[0]])

    # Complete along the null direction from the circle equations,
    # averaged over sensors: t^2 + 2*c_bar*t + e_bar = 0.
    offsets = x_r[:, None, :] - sensors[None, :, :]  # (N, 3, 2)
    rho = np.linalg.norm(offsets, axis=2)
    c_bar = np.mean(offsets @ null, axis=1)
    # Factored rho^2 - d^2 keeps precision when the point sits near the
    # sensor line (rho ~ d).
    e_bar = np.mean((rho - d) * (rho + d), axis=1)
    disc = np.sqrt(np.maximum(c_bar**2 - e_bar, 0.0))
    cand = np.stack(
        [x_r + (-c_bar + disc)[:, None] * null, x_r + (-c_bar - disc)[:, None] * null],
        axis=1,
    )  # (N, 2 roots, 2)

    res = np.linalg.norm(
        np.linalg.norm(cand[:, :, None, :] - sensors[None, None, :, :], axis=3) - d[:, None, :],
        axis=2,
    )
    inside = (
        (cand[..., 0] >= 0.0)
        & (cand[..., 0] <= geometry.board_width_mm)
        & (cand[..., 1] >= 0.0)
        & (cand[..., 1] <= geometry.board_height_mm)
    )
    # Prefer on-board roots; break remaining ties (mirror symmetry) by
    # range residual.
    score = res + np.where(inside, 0.0, 1e12)
    pick = np.argmin(score, axis=1)
    return cand[np.arange(len(d)), pick]


def trilaterate_many(
    distances: np.ndarray, geometry: SensorGeometry
) -> tuple[np.ndarray, np.ndarray]:
    """Solve a batch of range triples.

    Returns ``(positions, residuals)`` with shapes (N, 2) and (N,), where
    residual is the RMS mismatch between measured and implied ranges.
    """
    d = np.asarray(distances, dtype=float)
    if d.ndim != 2 or d.shape[1] != 3:
        raise ValueError("distances must have shape (N, 3)")
    if np.any(d < 0):
        raise ValueError("ranges must be nonnegative")
    sensors = geometry.sensor_array

    pos = _seed_positions(d, geometry)

    # One damped Gauss-Newton step on the range residuals.
    offsets = pos[:, None, :] - sensors[None, :, :]
    norms = np.linalg.norm(offsets, axis=2)
    r = norms - d
    safe = np.maximum(norms, 1e-12)
    jac = offsets / safe[..., None]
    jac[norms < 1e-12] = 0.0
    jtj = np.einsum("nij,nik->njk", jac, jac)
    jtr = np.einsum("nij,ni->nj", jac, r)
    damp = 1e-12 * (1.0 + np.trace(jtj, axis1=1, axis2=2))
    jtj = jtj + damp[:, None, None] * np.eye(2)
    step = np.linalg.solve(jtj, jtr[..., None])[..., 0]
    pos = pos - step

    norms = np.linalg.norm(pos[:, None, :] - sensors[None, :, :], axis=2)
    residuals = np.sqrt(np.mean((norms - d) ** 2, axis=1))
    return pos, residuals


def trilaterate(distances, geometry: SensorGeometry) -> tuple[tuple[float, float], float]:
    """Single-triple convenience wrapper around :func:`trilaterate_many`."""
    pos, res = trilaterate_many(np.asarray(distances, float)[None, :], geometry)
    return (float(pos[0, 0]), float(pos[0, 1])), float(res[0])


def ranges_to_position(frame: RangeFrame, geometry: SensorGeometry) -> HandEstimate:
    """Convert one frame's echo times into a board-plane hand estimate."""
    d = np.asarray(frame.echo_us, float) * geometry.speed_of_sound_mm_per_us / 2.0
    (x, y), residual = trilaterate(d, geometry)
    return HandEstimate(
        position_mm=(x, y),
        residual_mm=residual,
        in_bounds=geometry.contains((x, y)),
        source_seq=frame.seq,
    )


def position_to_cell(
    estimate: HandEstimate,
    geometry: SensorGeometry,
    reject_residual_mm: float = 15.0,
) -> GridCell | None:
    """Classify an estimate into its 3x3 grid cell.

    Returns None for out-of-bounds positions and for fixes whose RMS range
    residual exceeds ``reject_residual_mm`` (multipath / garbage frames).
    The exact upper board edge clamps into the last row/column.
    """
    if not estimate.in_bounds or estimate.residual_mm > reject_residual_mm:
        return None
    x, y = estimate.position_mm
    col = min(2, int(math.floor(3.0 * x / geometry.board_width_mm)))
    row = min(2, int(math.floor(3.0 * y / geometry.board_height_mm)))
    return GridCell(row=row, col=col)


class DwellPhase(Enum):
    IDLE = "idle"
    HOVERING = "hovering"
    COOLDOWN = "cooldown"


@dataclass(frozen=True)
class DwellConfig:
    dwell_ms: float = 800.0
    flicker_ms: float = 120.0
    cooldown_ms: float = 500.0

    def __post_init__(self):
        if self.dwell_ms < 0 or self.flicker_ms < 0 or self.cooldown_ms < 0:
            raise ValueError("dwell timings must be nonnegative")


@dataclass(frozen=True)
class DwellState:
    phase: DwellPhase = DwellPhase.IDLE
    cell: GridCell | None = None
    hover_since_ms: float = 0.0
    last_seen_ms: float = 0.0
    cooldown_until_ms: float = 0.0
    last_now_ms: float = -math.inf


def dwell_step(
    state: DwellState,
    cell: GridCell | None,
    now_ms: float,
    config: DwellConfig = DwellConfig(),
) -> tuple[DwellState, SelectionEvent | None]:
    """Advance the dwell automaton by one observation.

    Emits a SelectionEvent when one cell has been observed for at least
    ``dwell_ms`` with observation gaps no longer than ``flicker_ms``; after
    emission the automaton ignores input until ``cooldown_ms`` has passed.
    Timestamps must be nondecreasing across calls.
    """
    if now_ms < state.last_now_ms:
        raise ClockRegression(f"now_ms went backwards: {now_ms} < {state.last_now_ms}")

    if state.phase is DwellPhase.COOLDOWN:
        if now_ms < state.cooldown_until_ms:
            return replace(state, last_now_ms=now_ms), None
        state = replace(state, phase=DwellPhase.IDLE, cell=None)

    if state.phase is DwellPhase.HOVERING:
        gap = now_ms - state.last_seen_ms
        if cell == state.cell and cell is not None:
            if gap > config.flicker_ms:
                # Observation gap too long: this is a fresh hover.
                return _start_hover(state, cell, now_ms, config)
            elapsed = now_ms - state.hover_since_ms
            if elapsed >= config.dwell_ms:
                return _commit(state, cell, now_ms, elapsed, config)
            return replace(state, last_seen_ms=now_ms, last_now_ms=now_ms), None
        if cell is None:
            if gap > config.flicker_ms:
                return (
                    replace(state, phase=DwellPhase.IDLE, cell=None, last_now_ms=now_ms),
                    None,
                )
            return replace(state, last_now_ms=now_ms), None
        # Different cell: hover restarts there.
        return _start_hover(state, cell, now_ms, config)

    # IDLE
    if cell is None:
        return replace(state, last_now_ms=now_ms), None
    return _start_hover(state, cell, now_ms, config)


def _start_hover(state, cell, now_ms, config):
    state = replace(
        state,
        phase=DwellPhase.HOVERING,
        cell=cell,
        hover_since_ms=now_ms,
        last_seen_ms=now_ms,
        last_now_ms=now_ms,
    )
    if config.dwell_ms <= 0.0:
        return _commit(state, cell, now_ms, 0.0, config)
    return state, None


def _commit(state, cell, now_ms, elapsed, config):
    event = SelectionEvent(cell=cell, committed_at_ms=now_ms, dwell_ms=elapsed)
    new = replace(
        state,
        phase=DwellPhase.COOLDOWN,
        cell=None,
        cooldown_until_ms=now_ms + config.cooldown_ms,
        last_now_ms=now_ms,
    )
    return new, event


class DwellSelector:
    """Imperative wrapper owning one automaton instance (one per stream)."""

    def __init__(self, config: DwellConfig = DwellConfig()):
        self.config = config
        self.state = DwellState()

    def step(self, cell: GridCell | None, now_ms: float) -> SelectionEvent | None:
        self.state, event = dwell_step(self.state, cell, now_ms, self.config)
        return event
