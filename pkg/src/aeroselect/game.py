"""Session flow and scoring for the shape-matching board game.

A session runs through a fixed sequence of phases: the child logs in by
picking an avatar symbol and entering a name, watches a short intro
cinematic, chooses a difficulty from the scenario menu, and then plays a
matching round on the 3x3 board.  Each round places a set of characters
on distinct cells and asks for them one at a time; selecting the cell
that holds the current target is a success, selecting any other occupied
cell is a failure (the target stays up for a retry), and empty cells are
ignored.  A finished round is graded on a 1..10 scale and emitted as a
record ready for persistence.

The machine is strictly sequential and immutable: :func:`advance` maps a
state plus one input event to the next state and a list of effect values
(records to persist, messages for the UI channel).  Dispatching those
effects is the caller's concern; nothing here does I/O.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Union

from enum import Enum

from .locate import SelectionEvent

__all__ = [
    "AVATARS",
    "Avatar",
    "AvatarChosen",
    "CHARACTERS",
    "Character",
    "CinematicDone",
    "Continue",
    "DIFFICULTIES",
    "Difficulty",
    "GameEvent",
    "GameState",
    "InvalidInputForPhase",
    "NameEntered",
    "NoAttempts",
    "OutOfScale",
    "PersistRecord",
    "Phase",
    "Quit",
    "RoundLayout",
    "RoundState",
    "ScenarioChosen",
    "Selection",
    "SessionInfo",
    "Tick",
    "TrialRecord",
    "UiMessage",
    "advance",
    "grade_meaning",
    "grade_trial",
    "layout_round",
    "new_game",
    "state_snapshot",
]

BOARD_CELLS = 9

VALID_GROUPS = ("CG", "EG")
VALID_METHODS = ("Manual", "SG")
SESSIONS_PER_PLAYER = 4


class NoAttempts(ValueError):
    """Raised when a grade is requested for a round with no attempts."""


class OutOfScale(ValueError):
    """Raised for grades outside the 1..10 reporting scale."""


class InvalidInputForPhase(ValueError):
    """Raised when an event is not legal in the current phase.

    The state passed to :func:`advance` is immutable, so a caller that
    catches this error still holds the unchanged state.
    """

    def __init__(self, phase: "Phase", event: object, hint: str = "") -> None:
        msg = f"{type(event).__name__} is not valid during {phase.value}"
        if hint:
            msg += f": {hint}"
        super().__init__(msg)
        self.phase = phase
        self.event = event


# --------------------------------------------------------------------------
# Roster, avatars, difficulties


@dataclass(frozen=True)
class Character:
    """One of the nine collectible figures placed on the board."""

    id: int
    name: str
    sprite_ref: str

    def __post_init__(self) -> None:
        if not 0 <= self.id <= 8:
            raise ValueError(f"character id must be in 0..8, got {self.id}")


_CHARACTER_NAMES = (
    "Sun",
    "Moon",
    "Star",
    "Cloud",
    "Tree",
    "Fish",
    "Bird",
    "Boat",
    "Kite",
)

CHARACTERS: tuple[Character, ...] = tuple(
    Character(i, name, f"char_{i:02d}") for i, name in enumerate(_CHARACTER_NAMES)
)


@dataclass(frozen=True)
class Avatar:
    """Login symbol the child picks instead of typing credentials."""

    id: int
    label: str

    def __post_init__(self) -> None:
        if not 0 <= self.id <= 5:
            raise ValueError(f"avatar id must be in 0..5, got {self.id}")


AVATARS: tuple[Avatar, ...] = tuple(
    Avatar(i, label)
    for i, label in enumerate(
        ("Circle", "Square", "Triangle", "Diamond", "Heart", "Ring")
    )
)

_PAIRS_BY_LEVEL = {"Beginner": 3, "Intermediate": 6, "Advanced": 9}


@dataclass(frozen=True)
class Difficulty:
    """Difficulty preset fixing how many characters one round asks for."""

    level: str
    pairs_per_round: int
    time_limit_s: Optional[float] = None

    def __post_init__(self) -> None:
        expected = _PAIRS_BY_LEVEL.get(self.level)
        if expected is None:
            raise ValueError(
                f"level must be one of {sorted(_PAIRS_BY_LEVEL)}, got {self.level!r}"
            )
        if self.pairs_per_round != expected:
            raise ValueError(
                f"{self.level} rounds use {expected} pairs, got {self.pairs_per_round}"
            )
        if self.time_limit_s is not None and self.time_limit_s <= 0:
            raise ValueError("time_limit_s must be positive when set")

    @classmethod
    def for_level(cls, level: str, time_limit_s: Optional[float] = None) -> "Difficulty":
        """Canonical preset for a level name."""
        if level not in _PAIRS_BY_LEVEL:
            raise ValueError(
                f"level must be one of {sorted(_PAIRS_BY_LEVEL)}, got {level!r}"
            )
        return cls(level, _PAIRS_BY_LEVEL[level], time_limit_s)


DIFFICULTIES: Mapping[str, Difficulty] = {
    name: Difficulty.for_level(name) for name in _PAIRS_BY_LEVEL
}


# --------------------------------------------------------------------------
# Grading


def grade_trial(successes: int, failures: int) -> int:
    """Grade a finished round on the 1..10 scale.

    The grade is the success share scaled to ten points, rounded half
    up, and clamped so even an all-failure round reports at least 1.
    This is the single place the scoring policy lives.
    """
    if successes < 0 or failures < 0:
        raise ValueError("attempt counts must be nonnegative")
    attempts = successes + failures
    if attempts == 0:
        raise NoAttempts("cannot grade a round with no attempts")
    raw = 10.0 * successes / attempts
    return max(1, min(10, int(math.floor(raw + 0.5))))


_GRADE_BANDS = (
    (10, 10, "Surpasses the learning"),
    (9, 9, "Ace the learnings"),
    (7, 8, "Accomplishes the necessary learning"),
    (5, 6, "Is near accomplishing the learning"),
    (1, 4, "Doesn't accomplish the necessary"),
)


def grade_meaning(grade: Union[int, float]) -> str:
    """Descriptive band for a whole grade on the 1..10 scale."""
    if not float(grade).is_integer():
        raise OutOfScale(f"band lookup needs a whole grade, got {grade!r}")
    value = int(grade)
    if not 1 <= value <= 10:
        raise OutOfScale(f"grade {grade!r} is outside the 1..10 scale")
    for lo, hi, label in _GRADE_BANDS:
        if lo <= value <= hi:
            return label
    raise OutOfScale(f"no band covers grade {grade!r}")


# --------------------------------------------------------------------------
# Records


@dataclass(frozen=True)
class TrialRecord:
    """One graded round: who played, how long it took, and how it went.

    ``complete`` is False for rounds cut short (quit or timeout) that
    still collected at least one attempt.
    """

    player_id: str
    group: str
    session_index: int
    method: str
    elapsed_s: float
    successes: int
    failures: int
    grade: float
    complete: bool = True

    def __post_init__(self) -> None:
        if not self.player_id:
            raise ValueError("player_id must be nonempty")
        if self.group not in VALID_GROUPS:
            raise ValueError(f"group must be one of {VALID_GROUPS}, got {self.group!r}")
        if self.method not in VALID_METHODS:
            raise ValueError(
                f"method must be one of {VALID_METHODS}, got {self.method!r}"
            )
        if not 1 <= self.session_index <= SESSIONS_PER_PLAYER:
            raise ValueError(
                f"session_index must be in 1..{SESSIONS_PER_PLAYER}, "
                f"got {self.session_index}"
            )
        if not self.elapsed_s > 0:
            raise ValueError(f"elapsed_s must be positive, got {self.elapsed_s}")
        if self.successes < 0 or self.failures < 0:
            raise ValueError("attempt counts must be nonnegative")
        # Whole or half grade points only, inside the reporting scale.
        if not (1 <= self.grade <= 10) or not float(self.grade * 2).is_integer():
            raise ValueError(
                f"grade must be in 1..10 in half-point steps, got {self.grade!r}"
            )

    def to_dict(self) -> dict:
        """JSON-ready mapping with stable field names."""
        grade = self.grade
        return {
            "player_id": self.player_id,
            "group": self.group,
            "session_index": self.session_index,
            "method": self.method,
            "elapsed_s": self.elapsed_s,
            "successes": self.successes,
            "failures": self.failures,
            "grade": int(grade) if float(grade).is_integer() else float(grade),
            "complete": self.complete,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "TrialRecord":
        return cls(
            player_id=data["player_id"],
            group=data["group"],
            session_index=int(data["session_index"]),
            method=data["method"],
            elapsed_s=float(data["elapsed_s"]),
            successes=int(data["successes"]),
            failures=int(data["failures"]),
            grade=data["grade"],
            complete=bool(data.get("complete", True)),
        )


@dataclass(frozen=True)
class SessionInfo:
    """Identity and scheduling context inherited by emitted records."""

    player_id: str
    group: str = "EG"
    method: str = "SG"
    session_index: int = 1

    def __post_init__(self) -> None:
        if not self.player_id:
            raise ValueError("player_id must be nonempty")
        if self.group not in VALID_GROUPS:
            raise ValueError(f"group must be one of {VALID_GROUPS}, got {self.group!r}")
        if self.method not in VALID_METHODS:
            raise ValueError(
                f"method must be one of {VALID_METHODS}, got {self.method!r}"
            )
        if not 1 <= self.session_index <= SESSIONS_PER_PLAYER:
            raise ValueError(
                f"session_index must be in 1..{SESSIONS_PER_PLAYER}, "
                f"got {self.session_index}"
            )


# --------------------------------------------------------------------------
# Round layout and progress


@dataclass(frozen=True)
class RoundLayout:
    """Board placement and target order for one matching round."""

    placements: tuple[tuple[int, int], ...]  # (cell index, character id) pairs
    target_order: tuple[int, ...]

    def __post_init__(self) -> None:
        cells = [cell for cell, _ in self.placements]
        chars = [char for _, char in self.placements]
        if len(set(cells)) != len(cells):
            raise ValueError("each cell may hold at most one character")
        if len(set(chars)) != len(chars):
            raise ValueError("each character may appear at most once")
        if any(not 0 <= cell < BOARD_CELLS for cell in cells):
            raise ValueError("cell index out of range")
        if sorted(self.target_order) != sorted(chars):
            raise ValueError("target_order must visit exactly the placed characters")

    def char_at(self, cell_index: int) -> Optional[int]:
        """Character id on a cell, or None when the cell is empty."""
        for cell, char in self.placements:
            if cell == cell_index:
                return char
        return None

    def cell_of(self, char_id: int) -> int:
        for cell, char in self.placements:
            if char == char_id:
                return cell
        raise KeyError(f"character {char_id} is not placed this round")


def layout_round(difficulty: Difficulty, rng_seed: int) -> RoundLayout:
    """Place ``pairs_per_round`` characters on distinct cells.

    Deterministic per seed: the same seed always yields the same board
    and the same target presentation order.
    """
    rng = random.Random(rng_seed)
    count = difficulty.pairs_per_round
    chars = rng.sample(range(len(CHARACTERS)), count)
    cells = rng.sample(range(BOARD_CELLS), count)
    order = rng.sample(chars, count)
    return RoundLayout(
        placements=tuple(sorted(zip(cells, chars))), target_order=tuple(order)
    )


@dataclass(frozen=True)
class RoundState:
    """Progress within one matching round.

    Targets are asked in ``layout.target_order``; ``matched`` is always
    a prefix of that order, so matched plus remaining always equals the
    round's pair count.
    """

    layout: RoundLayout
    started_at_ms: float
    matched: tuple[int, ...] = ()
    failures: int = 0

    @property
    def successes(self) -> int:
        return len(self.matched)

    @property
    def remaining(self) -> int:
        return len(self.layout.target_order) - len(self.matched)

    @property
    def current_target(self) -> Optional[int]:
        if self.remaining == 0:
            return None
        return self.layout.target_order[len(self.matched)]


# --------------------------------------------------------------------------
# Phases, events, effects


class Phase(Enum):
    AWAIT_LOGIN = "AwaitLogin"
    CINEMATIC = "Cinematic"
    SCENARIO_MENU = "ScenarioMenu"
    IN_ROUND = "InRound"
    ROUND_RESULT = "RoundResult"
    FEEDBACK = "Feedback"


@dataclass(frozen=True)
class AvatarChosen:
    avatar_id: int


@dataclass(frozen=True)
class NameEntered:
    name: str


@dataclass(frozen=True)
class CinematicDone:
    pass


@dataclass(frozen=True)
class ScenarioChosen:
    level: str
    layout_seed: int = 0
    time_limit_s: Optional[float] = None


@dataclass(frozen=True)
class Selection:
    event: SelectionEvent


@dataclass(frozen=True)
class Tick:
    now_ms: float


@dataclass(frozen=True)
class Continue:
    """Acknowledgement advancing RoundResult to Feedback, and Feedback
    back to the scenario menu."""


@dataclass(frozen=True)
class Quit:
    pass


GameEvent = Union[
    AvatarChosen,
    NameEntered,
    CinematicDone,
    ScenarioChosen,
    Selection,
    Tick,
    Continue,
    Quit,
]


@dataclass(frozen=True)
class PersistRecord:
    """Effect: a graded round ready for the session store."""

    record: TrialRecord


@dataclass(frozen=True)
class UiMessage:
    """Effect: a message for the UI channel."""

    kind: str
    payload: Mapping[str, object] = field(default_factory=dict)


Effect = Union[PersistRecord, UiMessage]


# --------------------------------------------------------------------------
# State and transitions


@dataclass(frozen=True)
class GameState:
    """Complete machine state, advanced one event at a time."""

    session: SessionInfo
    phase: Phase = Phase.AWAIT_LOGIN
    avatar: Optional[Avatar] = None
    player_name: Optional[str] = None
    difficulty: Optional[Difficulty] = None
    round: Optional[RoundState] = None
    clock_ms: float = 0.0
    last_result: Optional[TrialRecord] = None


def new_game(session: SessionInfo) -> GameState:
    """Fresh machine waiting for the login flow."""
    return GameState(session=session)


def _result_message(record: TrialRecord) -> UiMessage:
    return UiMessage(
        "round_result",
        {
            "successes": record.successes,
            "failures": record.failures,
            "grade": record.grade,
            "meaning": grade_meaning(record.grade),
            "elapsed_s": record.elapsed_s,
            "complete": record.complete,
        },
    )


def _build_record(
    state: GameState, now_ms: float, *, complete: bool
) -> Optional[TrialRecord]:
    rnd = state.round
    assert rnd is not None
    attempts = rnd.successes + rnd.failures
    if attempts == 0:
        return None
    # Dwell commits land well after round start, but guard the record
    # invariant against degenerate scripted clocks anyway.
    elapsed_s = max((now_ms - rnd.started_at_ms) / 1000.0, 1e-3)
    info = state.session
    return TrialRecord(
        player_id=info.player_id,
        group=info.group,
        session_index=info.session_index,
        method=info.method,
        elapsed_s=elapsed_s,
        successes=rnd.successes,
        failures=rnd.failures,
        grade=grade_trial(rnd.successes, rnd.failures),
        complete=complete,
    )


def _finish_round(
    state: GameState, now_ms: float, *, complete: bool
) -> tuple[GameState, list[Effect]]:
    record = _build_record(state, now_ms, complete=complete)
    nxt = replace(
        state, phase=Phase.ROUND_RESULT, clock_ms=now_ms, last_result=record
    )
    effects: list[Effect] = []
    if record is not None:
        effects.append(PersistRecord(record))
        effects.append(_result_message(record))
    return nxt, effects


def _apply_selection(
    state: GameState, event: Selection
) -> tuple[GameState, list[Effect]]:
    rnd = state.round
    assert rnd is not None
    now = max(state.clock_ms, event.event.committed_at_ms)
    cell = event.event.cell.index
    target = rnd.current_target
    occupant = rnd.layout.char_at(cell)

    if occupant is None:
        # Empty cell: not an attempt, the round simply continues.
        nxt = replace(state, clock_ms=now)
        return nxt, [
            UiMessage(
                "selection",
                {"cell": cell, "outcome": "ignored", "target": target},
            )
        ]

    if occupant == target:
        matched = rnd.matched + (target,)
        new_round = replace(rnd, matched=matched)
        nxt = replace(state, round=new_round, clock_ms=now)
        effects: list[Effect] = [
            UiMessage(
                "selection",
                {
                    "cell": cell,
                    "outcome": "success",
                    "target": target,
                    "successes": new_round.successes,
                    "failures": new_round.failures,
                },
            )
        ]
        if new_round.remaining == 0:
            nxt, more = _finish_round(nxt, now, complete=True)
            effects.extend(more)
        return nxt, effects

    new_round = replace(rnd, failures=rnd.failures + 1)
    nxt = replace(state, round=new_round, clock_ms=now)
    return nxt, [
        UiMessage(
            "selection",
            {
                "cell": cell,
                "outcome": "failure",
                "target": target,
                "successes": new_round.successes,
                "failures": new_round.failures,
            },
        )
    ]


def advance(state: GameState, event: GameEvent) -> tuple[GameState, list[Effect]]:
    """Apply one input event; return the next state and emitted effects.

    Events illegal in the current phase raise InvalidInputForPhase; the
    (immutable) input state stays valid.  Ticks and Quit are accepted in
    every phase; stale ticks never move the clock backwards.
    """
    phase = state.phase

    if isinstance(event, Tick):
        now = max(state.clock_ms, event.now_ms)
        if (
            phase is Phase.IN_ROUND
            and state.difficulty is not None
            and state.difficulty.time_limit_s is not None
            and state.round is not None
            and now - state.round.started_at_ms >= state.difficulty.time_limit_s * 1000.0
        ):
            return _finish_round(state, now, complete=False)
        return replace(state, clock_ms=now), []

    if isinstance(event, Quit):
        effects: list[Effect] = []
        if phase is Phase.IN_ROUND:
            record = _build_record(state, state.clock_ms, complete=False)
            if record is not None:
                effects.append(PersistRecord(record))
        fresh = replace(
            new_game(state.session), clock_ms=state.clock_ms
        )
        return fresh, effects

    if isinstance(event, AvatarChosen):
        if phase is not Phase.AWAIT_LOGIN:
            raise InvalidInputForPhase(phase, event)
        if not 0 <= event.avatar_id < len(AVATARS):
            raise ValueError(f"avatar_id must be in 0..5, got {event.avatar_id}")
        return replace(state, avatar=AVATARS[event.avatar_id]), []

    if isinstance(event, NameEntered):
        if phase is not Phase.AWAIT_LOGIN:
            raise InvalidInputForPhase(phase, event)
        if state.avatar is None:
            raise InvalidInputForPhase(phase, event, "choose an avatar first")
        name = event.name.strip()
        if not name:
            raise ValueError("player name must be nonempty")
        return replace(state, player_name=name, phase=Phase.CINEMATIC), []

    if isinstance(event, CinematicDone):
        if phase is not Phase.CINEMATIC:
            raise InvalidInputForPhase(phase, event)
        return replace(state, phase=Phase.SCENARIO_MENU), []

    if isinstance(event, ScenarioChosen):
        if phase is not Phase.SCENARIO_MENU:
            raise InvalidInputForPhase(phase, event)
        difficulty = Difficulty.for_level(event.level, event.time_limit_s)
        rnd = RoundState(
            layout=layout_round(difficulty, event.layout_seed),
            started_at_ms=state.clock_ms,
        )
        nxt = replace(
            state,
            phase=Phase.IN_ROUND,
            difficulty=difficulty,
            round=rnd,
            last_result=None,
        )
        return nxt, []

    if isinstance(event, Selection):
        if phase is not Phase.IN_ROUND:
            raise InvalidInputForPhase(phase, event)
        return _apply_selection(state, event)

    if isinstance(event, Continue):
        if phase is Phase.ROUND_RESULT:
            nxt = replace(state, phase=Phase.FEEDBACK)
            result = state.last_result
            payload: dict[str, object] = {}
            if result is not None:
                payload = {
                    "grade": result.grade,
                    "meaning": grade_meaning(result.grade),
                }
            return nxt, [UiMessage("feedback", payload)]
        if phase is Phase.FEEDBACK:
            return replace(state, phase=Phase.SCENARIO_MENU, round=None), []
        raise InvalidInputForPhase(phase, event)

    raise TypeError(f"unknown event type: {type(event).__name__}")


def state_snapshot(state: GameState) -> dict:
    """JSON-ready snapshot of the machine for the UI channel."""
    round_info = None
    if state.round is not None:
        rnd = state.round
        round_info = {
            "board": [[cell, char] for cell, char in rnd.layout.placements],
            "target_order": list(rnd.layout.target_order),
            "matched": list(rnd.matched),
            "failures": rnd.failures,
            "current_target": rnd.current_target,
            "started_at_ms": rnd.started_at_ms,
        }
    difficulty = None
    if state.difficulty is not None:
        difficulty = {
            "level": state.difficulty.level,
            "pairs_per_round": state.difficulty.pairs_per_round,
            "time_limit_s": state.difficulty.time_limit_s,
        }
    avatar = None
    if state.avatar is not None:
        avatar = {"id": state.avatar.id, "label": state.avatar.label}
    return {
        "phase": state.phase.value,
        "avatar": avatar,
        "player_name": state.player_name,
        "difficulty": difficulty,
        "clock_ms": state.clock_ms,
        "round": round_info,
        "last_result": None if state.last_result is None else state.last_result.to_dict(),
    }
