"""Command line behavior: workflows and exit codes."""

from __future__ import annotations

import json
import pathlib
import socket

import pytest

from aeroselect.cli import main
from aeroselect.config import DATA_DIR_ENV
from aeroselect.game import DIFFICULTIES, layout_round
from aeroselect.pipeline import perfect_hover_waypoints
from aeroselect.wire import default_geometry

TRAJECTORY = [[0.0, 50.0, 50.0], [2000.0, 50.0, 50.0]]


def write_json(path, body) -> str:
    path = pathlib.Path(path)
    path.write_text(json.dumps(body))
    return str(path)


@pytest.fixture()
def config_file(tmp_path):
    return write_json(tmp_path / "service.json", {"data_dir": str(tmp_path / "data")})


def play_args(config_file, **extra):
    args = [
        "play",
        "--config",
        config_file,
        "--player",
        "cg01",
        "--group",
        "CG",
        "--method",
        "manual",
    ]
    for key, value in extra.items():
        args.extend([f"--{key.replace('_', '-')}", str(value)])
    return args


class TestSimulate:
    def test_writes_frames(self, tmp_path, capsys):
        trajectory = write_json(tmp_path / "path.json", TRAJECTORY)
        out = tmp_path / "stream.bin"
        assert main(["simulate", "--trajectory", trajectory, "--out", str(out)]) == 0
        blob = out.read_bytes()
        assert blob and len(blob) % 11 == 0

    def test_stdout_sink(self, tmp_path, capfdbinary):
        trajectory = write_json(tmp_path / "path.json", TRAJECTORY)
        assert main(["simulate", "--trajectory", trajectory]) == 0
        out = capfdbinary.readouterr().out
        assert len(out) % 11 == 0 and len(out) > 0

    def test_deterministic_for_seed(self, tmp_path):
        trajectory = write_json(tmp_path / "path.json", TRAJECTORY)
        a, b = tmp_path / "a.bin", tmp_path / "b.bin"
        for out in (a, b):
            code = main(
                [
                    "simulate",
                    "--trajectory",
                    trajectory,
                    "--noise-us",
                    "2.0",
                    "--seed",
                    "5",
                    "--out",
                    str(out),
                ]
            )
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_missing_trajectory_file(self, tmp_path):
        assert main(["simulate", "--trajectory", str(tmp_path / "nope.json")]) == 1

    def test_malformed_trajectory(self, tmp_path):
        trajectory = write_json(tmp_path / "path.json", [[1.0, 2.0]])
        assert main(["simulate", "--trajectory", trajectory]) == 1


class TestPlay:
    def test_sim_round(self, tmp_path, config_file, capsys):
        assert main(play_args(config_file, layout_seed=7)) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["records_written"] == 1
        assert summary["failures"] == 0
        assert summary["selections"] == 3
        assert pathlib.Path(summary["log_path"]).is_file()

    def test_file_input_matches_sim(self, tmp_path, capsys):
        # A captured stream replayed from disk produces the same log
        # bytes as the built-in simulator that generated it.
        geometry = default_geometry()
        layout = layout_round(DIFFICULTIES["Beginner"], rng_seed=7)
        waypoints = [list(w) for w in perfect_hover_waypoints(layout, geometry)]
        trajectory = write_json(tmp_path / "path.json", waypoints)
        blob = tmp_path / "capture.bin"
        assert (
            main(["simulate", "--trajectory", trajectory, "--out", str(blob)]) == 0
        )

        config_a = write_json(
            tmp_path / "a.json", {"data_dir": str(tmp_path / "data_a")}
        )
        config_b = write_json(
            tmp_path / "b.json", {"data_dir": str(tmp_path / "data_b")}
        )
        assert main(play_args(config_a, layout_seed=7)) == 0
        summary_a = json.loads(capsys.readouterr().out)
        assert main(play_args(config_b, layout_seed=7, input=f"file:{blob}")) == 0
        summary_b = json.loads(capsys.readouterr().out)
        bytes_a = pathlib.Path(summary_a["log_path"]).read_bytes()
        bytes_b = pathlib.Path(summary_b["log_path"]).read_bytes()
        assert bytes_a == bytes_b

    def test_env_data_dir_override(self, tmp_path, monkeypatch, capsys):
        override = tmp_path / "env-data"
        monkeypatch.setenv(DATA_DIR_ENV, str(override))
        monkeypatch.chdir(tmp_path)
        args = [
            "play",
            "--player",
            "cg01",
            "--group",
            "CG",
            "--method",
            "manual",
            "--layout-seed",
            "7",
        ]
        assert main(args) == 0
        summary = json.loads(capsys.readouterr().out)
        assert str(override) in summary["log_path"]

    def test_duplicate_session_is_data_error(self, config_file, capsys):
        assert main(play_args(config_file)) == 0
        capsys.readouterr()
        assert main(play_args(config_file)) == 3

    def test_overwrite_allows_rerun(self, config_file, capsys):
        assert main(play_args(config_file)) == 0
        assert main(play_args(config_file) + ["--overwrite"]) == 0

    def test_bad_input_spec(self, config_file):
        assert main(play_args(config_file, input="telepathy")) == 1

    def test_missing_capture_file(self, config_file, tmp_path):
        assert main(play_args(config_file, input=f"file:{tmp_path}/nope.bin")) == 1

    def test_bad_flag_values(self, config_file):
        assert main(play_args(config_file, group="XX")) == 1
        assert main(play_args(config_file, session="9")) == 1

    def test_bad_config_file(self, tmp_path):
        bad = write_json(tmp_path / "service.json", {"warp_factor": 9})
        assert main(play_args(bad)) == 1


class TestAnalyze:
    @pytest.fixture()
    def data_dir(self, tmp_path):
        out = tmp_path / "cohort"
        config = write_json(tmp_path / "study.json", {"group_size": 4})
        assert (
            main(
                [
                    "simulate-study",
                    "--config",
                    config,
                    "--seed",
                    "2",
                    "--out",
                    str(out),
                ]
            )
            == 0
        )
        return out

    def test_report_artifacts(self, tmp_path, data_dir):
        out = tmp_path / "reports" / "report.json"
        code = main(["analyze", "--data", str(data_dir), "--out", str(out)])
        assert code == 0
        assert out.is_file()
        body = json.loads(out.read_text())
        assert set(body["measures"]) == {"time", "grade"}
        parent = out.parent
        assert (parent / "records.csv").is_file()
        assert (parent / "boxplot_time.png").is_file()
        assert (parent / "boxplot_grade.png").is_file()

    def test_single_measure(self, tmp_path, data_dir):
        out_dir = tmp_path / "reports"
        code = main(
            [
                "analyze",
                "--data",
                str(data_dir),
                "--measure",
                "time",
                "--out",
                str(out_dir),
            ]
        )
        assert code == 0
        body = json.loads((out_dir / "report.json").read_text())
        assert set(body["measures"]) == {"time"}
        assert not (out_dir / "boxplot_grade.png").exists()

    def test_missing_data_dir(self, tmp_path):
        assert main(["analyze", "--data", str(tmp_path / "nope"), "--out", "r"]) == 1

    def test_empty_data_dir(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        out = tmp_path / "r"
        assert main(["analyze", "--data", str(empty), "--out", str(out)]) == 3

    def test_corrupt_log_is_data_error(self, tmp_path, data_dir):
        victim = next(data_dir.glob("*/*/session1.ndjson"))
        with open(victim, "a") as fh:
            fh.write("{broken json}\n")
        out = tmp_path / "r"
        assert main(["analyze", "--data", str(data_dir), "--out", str(out)]) == 3


class TestSimulateStudy:
    def test_refuses_existing_without_overwrite(self, tmp_path):
        out = tmp_path / "cohort"
        config = write_json(tmp_path / "study.json", {"group_size": 2})
        base = ["simulate-study", "--config", config, "--out", str(out)]
        assert main(base) == 0
        assert main(base) == 3
        assert main(base + ["--overwrite"]) == 0

    def test_bad_study_config(self, tmp_path):
        config = write_json(tmp_path / "study.json", {"group_size": -1})
        out = tmp_path / "cohort"
        assert main(["simulate-study", "--config", config, "--out", str(out)]) == 1


class TestServe:
    def test_busy_port_is_config_error(self, tmp_path):
        blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        blocker.bind(("127.0.0.1", 0))
        port = blocker.getsockname()[1]
        try:
            config = write_json(
                tmp_path / "service.json",
                {"listen_host": "127.0.0.1", "listen_port": port},
            )
            assert main(["serve", "--config", config]) == 1
        finally:
            blocker.close()


class TestUsage:
    def test_no_command(self):
        assert main([]) == 1

    def test_unknown_command(self):
        assert main(["transmogrify"]) == 1

    def test_help_is_ok(self):
        assert main(["--help"]) == 0
