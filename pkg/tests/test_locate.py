import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aeroselect.locate import (
    ClockRegression,
    DwellConfig,
    DwellPhase,
    DwellSelector,
    DwellState,
    GridCell,
    HandEstimate,
    SelectionEvent,
    dwell_step,
    position_to_cell,
    ranges_to_position,
    trilaterate,
    trilaterate_many,
)
from aeroselect.wire import (
    RangeFrame,
    SensorGeometry,
    default_geometry,
    sample_trajectory,
    simulate_stream,
)

from .oracles import brute_force_position

GEOMETRY = default_geometry()


def exact_ranges(point, geometry=GEOMETRY):
    return np.linalg.norm(geometry.sensor_array - np.asarray(point, float), axis=1)


class TestTrilateration:
    def test_board_center_inversion(self):
        (x, y), residual = trilaterate(exact_ranges((150.0, 150.0)), GEOMETRY)
        assert abs(x - 150.0) < 1e-6 and abs(y - 150.0) < 1e-6
        assert residual < 1e-9

    def test_symmetric_ranges_pin_the_midline(self):
        # Pythagorean triples keep every intermediate exact: x must come out
        # bitwise 150 when d0 == d2.
        for d in [(170.0, 80.0, 170.0), (250.0, 200.0, 250.0), (187.5, 112.5, 187.5)]:
            (x, _), _ = trilaterate(d, GEOMETRY)
            assert x == 150.0

    def test_lattice_inversion_collinear_default(self):
        pts = np.array(
            [(x, y) for x in np.arange(0, 301, 10.0) for y in np.arange(0, 301, 10.0)]
        )
        d = np.linalg.norm(pts[:, None, :] - GEOMETRY.sensor_array[None, :, :], axis=2)
        pos, res = trilaterate_many(d, GEOMETRY)
        assert np.max(np.linalg.norm(pos - pts, axis=1)) < 1e-6
        assert np.max(res) < 1e-9

    def test_lattice_inversion_noncollinear(self):
        g = SensorGeometry(
            positions=((0.0, 0.0), (300.0, 30.0), (120.0, 290.0)),
            board_width_mm=300.0,
            board_height_mm=300.0,
        )
        pts = np.array(
            [(x, y) for x in np.arange(0, 301, 10.0) for y in np.arange(0, 301, 10.0)]
        )
        d = np.linalg.norm(pts[:, None, :] - g.sensor_array[None, :, :], axis=2)
        pos, _ = trilaterate_many(d, g)
        assert np.max(np.linalg.norm(pos - pts, axis=1)) < 1e-6

    def test_noisy_solution_matches_brute_force_oracle(self):
        rng = np.random.default_rng(42)
        sigma_mm = 2.0 * GEOMETRY.speed_of_sound_mm_per_us / 2.0  # 2 us echo noise
        for _ in range(40):
            true = rng.uniform(30.0, 270.0, size=2)
            d = exact_ranges(true) + rng.normal(0.0, sigma_mm, size=3)
            (x, y), _ = trilaterate(d, GEOMETRY)
            ref = brute_force_position(d, GEOMETRY, step_mm=0.5)
            assert math.hypot(x - ref[0], y - ref[1]) < 3.0

    def test_negative_ranges_rejected(self):
        with pytest.raises(ValueError):
            trilaterate((-1.0, 10.0, 10.0), GEOMETRY)

    def test_frame_to_estimate(self):
        frames = simulate_stream(GEOMETRY, [(0.0, 90.0, 210.0)], noise_sigma_us=0.0)
        est = ranges_to_position(frames[0], GEOMETRY)
        assert est.source_seq == frames[0].seq
        assert est.in_bounds
        # integer-microsecond quantization: <= 0.5 us per echo, propagated
        assert math.hypot(est.position_mm[0] - 90.0, est.position_mm[1] - 210.0) < 1.0

    def test_forward_model_consistency_over_trajectory(self):
        path = [(0.0, 60.0, 100.0), (1000.0, 240.0, 250.0)]
        frames = simulate_stream(GEOMETRY, path, noise_sigma_us=0.0, rate_hz=30)
        samples = sample_trajectory(path, 30)
        assert len(frames) == len(samples) == 31
        for frame, (_, tx, ty) in zip(frames, samples):
            est = ranges_to_position(frame, GEOMETRY)
            err = math.hypot(est.position_mm[0] - tx, est.position_mm[1] - ty)
            assert err < 1.0


class TestGridCell:
    def test_corner_center_and_clamp(self):
        mk = lambda p: HandEstimate(p, residual_mm=0.0, in_bounds=True, source_seq=0)
        assert position_to_cell(mk((0.0, 0.0)), GEOMETRY).index == 0
        assert position_to_cell(mk((150.0, 150.0)), GEOMETRY).index == 4
        assert position_to_cell(mk((300.0, 300.0)), GEOMETRY).index == 8

    def test_out_of_bounds_returns_none(self):
        est = HandEstimate((-1.0, 50.0), residual_mm=0.0, in_bounds=False, source_seq=0)
        assert position_to_cell(est, GEOMETRY) is None

    def test_high_residual_rejected(self):
        est = HandEstimate((150.0, 150.0), residual_mm=20.0, in_bounds=True, source_seq=0)
        assert position_to_cell(est, GEOMETRY) is None
        assert position_to_cell(est, GEOMETRY, reject_residual_mm=25.0) is not None

    @given(
        x=st.floats(0.0, 300.0, allow_nan=False),
        y=st.floats(0.0, 300.0, allow_nan=False),
    )
    def test_in_bounds_points_partition_into_exactly_one_cell(self, x, y):
        est = HandEstimate((x, y), residual_mm=0.0, in_bounds=True, source_seq=0)
        cell = position_to_cell(est, GEOMETRY)
        assert cell is not None
        assert 0 <= cell.index <= 8
        # cell boundaries: membership is unambiguous by construction
        assert cell.col == min(2, int(x // 100.0))
        assert cell.row == min(2, int(y // 100.0))

    def test_index_row_col_consistency(self):
        for idx in range(9):
            cell = GridCell.from_index(idx)
            assert cell.index == idx
        with pytest.raises(ValueError):
            GridCell(row=3, col=0)


CELL4 = GridCell.from_index(4)
CELL5 = GridCell.from_index(5)


class TestDwell:
    def test_steady_hover_commits_once(self):
        sel = DwellSelector()
        events = []
        # 26 samples at 30 Hz cover 0..833 ms, past the 800 ms threshold.
        for k in range(26):
            ev = sel.step(CELL4, k * (1000.0 / 30.0))
            if ev:
                events.append(ev)
        assert len(events) == 1
        assert events[0].cell == CELL4
        assert events[0].dwell_ms >= 800.0

    def test_alternating_cells_never_commit(self):
        sel = DwellSelector()
        t = 0.0
        while t < 2000.0:
            cell = CELL4 if int(t / 100.0) % 2 == 0 else CELL5
            assert sel.step(cell, t) is None
            t += 100.0 / 3.0

    def test_short_dropout_survives(self):
        # Exact timeline: hover from 0, samples every 33.3 ms, two samples
        # missed around 400..460 ms (a 100 ms observation gap, under the
        # 120 ms flicker limit), commit at the first sample past 800 ms.
        sel = DwellSelector()
        events = []
        for k in range(40):
            t = k * (100.0 / 3.0)
            cell = None if 400.0 <= t < 460.0 else CELL4
            ev = sel.step(cell, t)
            if ev:
                events.append((t, ev))
        assert len(events) == 1
        t_commit, ev = events[0]
        assert ev.dwell_ms == pytest.approx(t_commit)
        assert ev.dwell_ms >= 800.0

    def test_long_dropout_resets_hover(self):
        sel = DwellSelector()
        sel.step(CELL4, 0.0)
        sel.step(None, 50.0)
        sel.step(None, 200.0)  # gap 200 ms > flicker 120: back to idle
        assert sel.state.phase is DwellPhase.IDLE
        ev = sel.step(CELL4, 210.0)
        assert ev is None
        assert sel.state.hover_since_ms == 210.0

    def test_cooldown_blocks_events(self):
        cfg = DwellConfig(dwell_ms=100.0, flicker_ms=50.0, cooldown_ms=500.0)
        sel = DwellSelector(cfg)
        times_with_events = []
        for k in range(200):
            t = k * 10.0
            if sel.step(CELL4, t):
                times_with_events.append(t)
        for prev, nxt in zip(times_with_events, times_with_events[1:]):
            assert nxt - prev >= cfg.dwell_ms + cfg.cooldown_ms

    def test_clock_regression_raises(self):
        sel = DwellSelector()
        sel.step(CELL4, 100.0)
        with pytest.raises(ClockRegression):
            sel.step(CELL4, 99.0)

    def test_cell_change_restarts_dwell(self):
        sel = DwellSelector()
        for t in (0.0, 100.0, 200.0, 300.0, 400.0, 500.0, 600.0):
            assert sel.step(CELL4, t) is None
        sel.step(CELL5, 700.0)
        ev = sel.step(CELL5, 800.0)  # only 100 ms on cell 5
        assert ev is None
        assert sel.state.cell == CELL5
        assert sel.state.hover_since_ms == 700.0

    @settings(max_examples=200)
    @given(
        steps=st.lists(
            st.tuples(
                st.one_of(st.none(), st.integers(0, 8)), st.floats(0.1, 60.0)
            ),
            min_size=1,
            max_size=120,
        )
    )
    def test_event_spacing_property(self, steps):
        cfg = DwellConfig()
        state = DwellState()
        now = 0.0
        commits = []
        for cell_idx, dt in steps:
            now += dt
            cell = None if cell_idx is None else GridCell.from_index(cell_idx)
            state, ev = dwell_step(state, cell, now, cfg)
            if ev:
                assert ev.dwell_ms >= cfg.dwell_ms
                commits.append(now)
        for prev, nxt in zip(commits, commits[1:]):
            # one event per dwell window; nothing fires during cooldown
            assert nxt - prev >= cfg.dwell_ms + cfg.cooldown_ms
