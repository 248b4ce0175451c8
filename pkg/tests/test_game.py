"""Game flow, layout, and grading tests."""

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aeroselect.game import (
    AVATARS,
    CHARACTERS,
    DIFFICULTIES,
    AvatarChosen,
    CinematicDone,
    Continue,
    Difficulty,
    GameState,
    InvalidInputForPhase,
    NameEntered,
    NoAttempts,
    OutOfScale,
    PersistRecord,
    Phase,
    Quit,
    RoundState,
    ScenarioChosen,
    Selection,
    SessionInfo,
    Tick,
    TrialRecord,
    UiMessage,
    advance,
    grade_meaning,
    grade_trial,
    layout_round,
    new_game,
    state_snapshot,
)
from aeroselect.locate import GridCell, SelectionEvent

SESSION = SessionInfo(player_id="p01", group="EG", method="SG", session_index=1)


def select(cell_index: int, at_ms: float = 1000.0) -> Selection:
    return Selection(
        SelectionEvent(
            cell=GridCell.from_index(cell_index), committed_at_ms=at_ms, dwell_ms=800.0
        )
    )


def logged_in_state(level: str = "Beginner", seed: int = 7) -> GameState:
    state = new_game(SESSION)
    state, _ = advance(state, AvatarChosen(2))
    state, _ = advance(state, NameEntered("Alex"))
    state, _ = advance(state, CinematicDone())
    state, _ = advance(state, ScenarioChosen(level, layout_seed=seed))
    return state


class TestRoster:
    def test_nine_unique_characters(self):
        assert len(CHARACTERS) == 9
        assert len({c.id for c in CHARACTERS}) == 9
        assert len({c.name for c in CHARACTERS}) == 9

    def test_six_avatars(self):
        assert len(AVATARS) == 6
        assert [a.id for a in AVATARS] == list(range(6))

    def test_difficulty_pair_counts(self):
        assert DIFFICULTIES["Beginner"].pairs_per_round == 3
        assert DIFFICULTIES["Intermediate"].pairs_per_round == 6
        assert DIFFICULTIES["Advanced"].pairs_per_round == 9

    def test_difficulty_rejects_mismatched_pairs(self):
        with pytest.raises(ValueError):
            Difficulty("Beginner", 6)
        with pytest.raises(ValueError):
            Difficulty("Casual", 3)


class TestGrading:
    def test_perfect_round(self):
        assert grade_trial(9, 0) == 10

    def test_all_failures_clamps_to_one(self):
        assert grade_trial(0, 5) == 1

    def test_three_of_four_rounds_half_up(self):
        # 10 * 3/4 = 7.5 rounds up to 8.
        assert grade_trial(3, 1) == 8

    def test_no_attempts_rejected(self):
        with pytest.raises(NoAttempts):
            grade_trial(0, 0)

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            grade_trial(-1, 2)

    @given(st.integers(0, 50), st.integers(0, 50))
    def test_monotone_in_successes_and_failures(self, s, f):
        if s + f == 0:
            return
        g = grade_trial(s, f)
        assert 1 <= g <= 10
        assert grade_trial(s + 1, f) >= g
        assert grade_trial(s, f + 1) <= g

    def test_meaning_labels(self):
        assert grade_meaning(10) == "Surpasses the learning"
        assert grade_meaning(9) == "Ace the learnings"
        assert grade_meaning(8) == "Accomplishes the necessary learning"
        assert grade_meaning(7) == "Accomplishes the necessary learning"
        assert grade_meaning(6) == "Is near accomplishing the learning"
        assert grade_meaning(5) == "Is near accomplishing the learning"
        for g in (1, 2, 3, 4):
            assert grade_meaning(g) == "Doesn't accomplish the necessary"

    def test_bands_partition_scale(self):
        labels = {g: grade_meaning(g) for g in range(1, 11)}
        assert len(labels) == 10  # every grade maps to exactly one band

    def test_out_of_scale(self):
        for bad in (0, 11, 7.5, -3):
            with pytest.raises(OutOfScale):
                grade_meaning(bad)

    @given(st.integers(0, 30), st.integers(0, 30))
    def test_every_grade_lands_in_a_band(self, s, f):
        if s + f == 0:
            return
        assert grade_meaning(grade_trial(s, f))


class TestLayout:
    def test_beginner_occupies_three_cells(self):
        layout = layout_round(DIFFICULTIES["Beginner"], 42)
        assert len(layout.placements) == 3
        occupied = {cell for cell, _ in layout.placements}
        assert len(occupied) == 3
        empty = [c for c in range(9) if layout.char_at(c) is None]
        assert len(empty) == 6

    def test_advanced_uses_every_cell_and_character(self):
        for seed in (0, 1, 99, 2024):
            layout = layout_round(DIFFICULTIES["Advanced"], seed)
            assert {cell for cell, _ in layout.placements} == set(range(9))
            assert {char for _, char in layout.placements} == set(range(9))
            assert sorted(layout.target_order) == list(range(9))

    def test_same_seed_same_layout(self):
        a = layout_round(DIFFICULTIES["Intermediate"], 1234)
        b = layout_round(DIFFICULTIES["Intermediate"], 1234)
        assert a == b

    def test_target_order_visits_placed_characters(self):
        layout = layout_round(DIFFICULTIES["Intermediate"], 5)
        placed = sorted(char for _, char in layout.placements)
        assert sorted(layout.target_order) == placed

    def test_cell_lookup(self):
        layout = layout_round(DIFFICULTIES["Beginner"], 8)
        for cell, char in layout.placements:
            assert layout.char_at(cell) == char
            assert layout.cell_of(char) == cell
        with pytest.raises(KeyError):
            layout.cell_of(
                next(c for c in range(9) if c not in set(layout.target_order))
            )


class TestFlow:
    def test_login_sequence_reaches_cinematic(self):
        state = new_game(SESSION)
        state, _ = advance(state, AvatarChosen(3))
        assert state.phase is Phase.AWAIT_LOGIN
        assert state.avatar is AVATARS[3]
        state, _ = advance(state, NameEntered("Sam"))
        assert state.phase is Phase.CINEMATIC
        assert state.player_name == "Sam"

    def test_name_without_avatar_rejected(self):
        state = new_game(SESSION)
        with pytest.raises(InvalidInputForPhase):
            advance(state, NameEntered("Sam"))

    def test_scripted_beginner_session(self):
        # Hand-written expected transition list for the whole script.
        state = new_game(SESSION)
        layout = layout_round(DIFFICULTIES["Beginner"], 7)
        events = [
            AvatarChosen(1),
            NameEntered("Alex"),
            CinematicDone(),
            ScenarioChosen("Beginner", layout_seed=7),
        ]
        t = 1000.0
        for target in layout.target_order:
            events.append(select(layout.cell_of(target), at_ms=t))
            t += 1000.0
        expected_phases = [
            Phase.AWAIT_LOGIN,
            Phase.CINEMATIC,
            Phase.SCENARIO_MENU,
            Phase.IN_ROUND,
            Phase.IN_ROUND,
            Phase.IN_ROUND,
            Phase.ROUND_RESULT,
        ]
        records = []
        seen = []
        for event in events:
            state, effects = advance(state, event)
            seen.append(state.phase)
            records.extend(e.record for e in effects if isinstance(e, PersistRecord))
        assert seen == expected_phases
        assert state.round.successes == 3
        assert state.round.failures == 0
        assert len(records) == 1
        assert records[0].grade == 10
        assert records[0].complete is True

    def test_correct_selection_advances_target(self):
        state = logged_in_state()
        layout = state.round.layout
        first = layout.target_order[0]
        state, effects = advance(state, select(layout.cell_of(first)))
        assert state.round.matched == (first,)
        assert state.round.current_target == layout.target_order[1]
        outcome = [e for e in effects if isinstance(e, UiMessage)][0]
        assert outcome.payload["outcome"] == "success"

    def test_wrong_occupied_cell_is_failure(self):
        state = logged_in_state()
        layout = state.round.layout
        wrong = next(
            cell for cell, char in layout.placements if char != layout.target_order[0]
        )
        state, effects = advance(state, select(wrong))
        assert state.phase is Phase.IN_ROUND
        assert state.round.failures == 1
        assert state.round.matched == ()
        # Failure keeps the same target up for a retry.
        assert state.round.current_target == layout.target_order[0]
        assert effects[0].payload["outcome"] == "failure"

    def test_empty_cell_is_ignored(self):
        state = logged_in_state()
        layout = state.round.layout
        empty = next(c for c in range(9) if layout.char_at(c) is None)
        nxt, effects = advance(state, select(empty))
        assert nxt.round.failures == 0
        assert nxt.round.matched == ()
        assert effects[0].payload["outcome"] == "ignored"

    def test_conservation_inside_round(self):
        state = logged_in_state("Intermediate", seed=3)
        layout = state.round.layout
        rng = random.Random(0)
        t = 1000.0
        while state.phase is Phase.IN_ROUND:
            cell = rng.randrange(9)
            state, _ = advance(state, select(cell, at_ms=t))
            t += 500.0
            if state.phase is Phase.IN_ROUND:
                rnd = state.round
                assert rnd.successes + rnd.remaining == 6
        assert state.phase is Phase.ROUND_RESULT

    def test_selection_outside_round_rejected(self):
        state = new_game(SESSION)
        before = state
        with pytest.raises(InvalidInputForPhase):
            advance(state, select(4))
        assert state == before

    def test_scenario_during_cinematic_rejected(self):
        state = new_game(SESSION)
        state, _ = advance(state, AvatarChosen(0))
        state, _ = advance(state, NameEntered("Kim"))
        assert state.phase is Phase.CINEMATIC
        with pytest.raises(InvalidInputForPhase):
            advance(state, ScenarioChosen("Beginner"))

    def test_result_feedback_menu_cycle(self):
        state = logged_in_state()
        layout = state.round.layout
        t = 1000.0
        for target in layout.target_order:
            state, _ = advance(state, select(layout.cell_of(target), at_ms=t))
            t += 800.0
        assert state.phase is Phase.ROUND_RESULT
        state, effects = advance(state, Continue())
        assert state.phase is Phase.FEEDBACK
        assert effects[0].kind == "feedback"
        assert effects[0].payload["meaning"] == "Surpasses the learning"
        state, _ = advance(state, Continue())
        assert state.phase is Phase.SCENARIO_MENU
        assert state.round is None
        # Menu re-entry supports another round straight away.
        state, _ = advance(state, ScenarioChosen("Advanced", layout_seed=11))
        assert state.phase is Phase.IN_ROUND
        assert state.round.remaining == 9

    def test_quit_mid_round_persists_partial_record(self):
        state = logged_in_state()
        layout = state.round.layout
        state, _ = advance(state, select(layout.cell_of(layout.target_order[0])))
        state, effects = advance(state, Quit())
        assert state.phase is Phase.AWAIT_LOGIN
        records = [e.record for e in effects if isinstance(e, PersistRecord)]
        assert len(records) == 1
        assert records[0].complete is False
        assert records[0].successes == 1

    def test_quit_without_attempts_emits_nothing(self):
        state = logged_in_state()
        state, effects = advance(state, Quit())
        assert state.phase is Phase.AWAIT_LOGIN
        assert effects == []

    def test_tick_never_moves_clock_backwards(self):
        state = new_game(SESSION)
        state, _ = advance(state, Tick(500.0))
        state, _ = advance(state, Tick(200.0))
        assert state.clock_ms == 500.0

    def test_time_limit_expiry_ends_round(self):
        difficulty = Difficulty("Beginner", 3, time_limit_s=2.0)
        from aeroselect.game import layout_round as mk

        state = GameState(
            session=SESSION,
            phase=Phase.IN_ROUND,
            avatar=AVATARS[0],
            player_name="Kim",
            difficulty=difficulty,
            round=RoundState(layout=mk(difficulty, 1), started_at_ms=0.0),
        )
        state, _ = advance(state, select(state.round.layout.placements[0][0], 100.0))
        state, effects = advance(state, Tick(2500.0))
        assert state.phase is Phase.ROUND_RESULT
        records = [e.record for e in effects if isinstance(e, PersistRecord)]
        assert len(records) == 1
        assert records[0].complete is False


class TestTrialRecord:
    def test_rejects_out_of_range_session(self):
        with pytest.raises(ValueError):
            TrialRecord("p", "EG", 5, "SG", 60.0, 3, 0, 10)

    def test_rejects_unknown_group_and_method(self):
        with pytest.raises(ValueError):
            TrialRecord("p", "XX", 1, "SG", 60.0, 3, 0, 10)
        with pytest.raises(ValueError):
            TrialRecord("p", "EG", 1, "Stylus", 60.0, 3, 0, 10)

    def test_rejects_nonpositive_elapsed(self):
        with pytest.raises(ValueError):
            TrialRecord("p", "EG", 1, "SG", 0.0, 3, 0, 10)

    def test_half_grades_allowed_finer_steps_rejected(self):
        TrialRecord("p", "EG", 1, "SG", 60.0, 3, 1, 7.5)
        with pytest.raises(ValueError):
            TrialRecord("p", "EG", 1, "SG", 60.0, 3, 1, 7.3)

    def test_dict_round_trip(self):
        rec = TrialRecord("p07", "CG", 2, "Manual", 275.4, 5, 1, 8, complete=True)
        assert TrialRecord.from_dict(rec.to_dict()) == rec


ALLOWED_TRANSITIONS = {
    (Phase.AWAIT_LOGIN, Phase.CINEMATIC),
    (Phase.CINEMATIC, Phase.SCENARIO_MENU),
    (Phase.SCENARIO_MENU, Phase.IN_ROUND),
    (Phase.IN_ROUND, Phase.ROUND_RESULT),
    (Phase.ROUND_RESULT, Phase.FEEDBACK),
    (Phase.FEEDBACK, Phase.SCENARIO_MENU),
}


def random_event(rng: random.Random, clock: float):
    kind = rng.randrange(8)
    if kind == 0:
        return AvatarChosen(rng.randrange(6))
    if kind == 1:
        return NameEntered("kid")
    if kind == 2:
        return CinematicDone()
    if kind == 3:
        return ScenarioChosen(
            rng.choice(list(DIFFICULTIES)), layout_seed=rng.randrange(1000)
        )
    if kind == 4:
        return select(rng.randrange(9), at_ms=clock + rng.uniform(0.0, 50.0))
    if kind == 5:
        return Tick(clock + rng.uniform(0.0, 100.0))
    if kind == 6:
        return Continue()
    return Quit()


def drive_fuzz(seed: int, steps: int) -> None:
    """Shared phase-order/conservation fuzz harness."""
    rng = random.Random(seed)
    state = new_game(SESSION)
    for _ in range(steps):
        event = random_event(rng, state.clock_ms)
        prev = state
        try:
            state, _ = advance(state, event)
        except InvalidInputForPhase:
            assert state == prev  # rejected inputs leave state unchanged
            continue
        hop = (prev.phase, state.phase)
        assert (
            hop[0] == hop[1]
            or hop in ALLOWED_TRANSITIONS
            or state.phase is Phase.AWAIT_LOGIN  # Quit resets from anywhere
        ), f"illegal transition {hop}"
        assert state.clock_ms >= prev.clock_ms
        if state.phase is Phase.IN_ROUND:
            rnd = state.round
            pairs = state.difficulty.pairs_per_round
            assert rnd.successes + rnd.remaining == pairs
            assert rnd.successes == len(rnd.matched)


class TestFuzz:
    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_random_sequences_respect_phase_order(self, seed):
        drive_fuzz(seed, steps=120)


class TestSnapshot:
    def test_snapshot_serializes_every_phase(self):
        state = new_game(SESSION)
        snapshots = [state_snapshot(state)]
        script = [
            AvatarChosen(4),
            NameEntered("Noa"),
            CinematicDone(),
            ScenarioChosen("Beginner", layout_seed=2),
        ]
        for event in script:
            state, _ = advance(state, event)
            snapshots.append(state_snapshot(state))
        layout = state.round.layout
        t = 1000.0
        for target in layout.target_order:
            state, _ = advance(state, select(layout.cell_of(target), at_ms=t))
            t += 700.0
        snapshots.append(state_snapshot(state))
        state, _ = advance(state, Continue())
        snapshots.append(state_snapshot(state))
        for snap in snapshots:
            json.dumps(snap)  # must be JSON-clean
        assert snapshots[-1]["phase"] == "Feedback"
        assert snapshots[-1]["last_result"]["grade"] == 10
