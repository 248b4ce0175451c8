"""Command line entry point.

Subcommands cover the full workflow: ``simulate`` produces a sensor
byte stream from a trajectory, ``play`` drives a session from a byte
source (device, capture file, or built-in simulator), ``serve`` runs
the message channel and report API, ``analyze`` renders the group
report with figures, and ``simulate-study`` generates a full cohort
data set.

Exit codes: 0 success, 1 configuration problem, 2 I/O problem,
3 corrupt or unusable data.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import Optional

from .config import DATA_DIR_ENV, ConfigError, load_config
from .game import DIFFICULTIES, SessionInfo, layout_round
from .pipeline import InputClosed, perfect_hover_waypoints, run_session
from .report import MEASURE_LABELS, write_report
from .store import SessionStore, StorageFailure
from .study import StudyConfig, write_study
from .wire import default_geometry, encode_stream, simulate_stream, SensorGeometry

__all__ = ["main"]

CHUNK_BYTES = 4096
EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_DATA = 3

METHOD_NAMES = {"manual": "Manual", "sg": "SG"}


def _read_json(path) -> object:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc.msg}") from exc


def _load_trajectory(path) -> list[tuple[float, float, float]]:
    body = _read_json(path)
    if not isinstance(body, list) or not body:
        raise ConfigError(f"{path}: expected a non-empty list of [t_ms, x_mm, y_mm]")
    waypoints = []
    for i, entry in enumerate(body):
        if not isinstance(entry, (list, tuple)) or len(entry) != 3:
            raise ConfigError(f"{path}: entry {i} is not a [t_ms, x_mm, y_mm] triple")
        try:
            waypoints.append(tuple(float(v) for v in entry))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: entry {i} is not numeric") from exc
    return waypoints


def _load_geometry(path) -> SensorGeometry:
    if path is None:
        return default_geometry()
    body = _read_json(path)
    try:
        return SensorGeometry.from_dict(body)
    except (TypeError, KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: bad geometry: {exc}") from exc


def _byte_source(spec: str, config, args):
    """Turn an --input spec into an iterable of byte chunks."""
    if spec == "sim":
        geometry = config.load_geometry()
        if args.trajectory is not None:
            waypoints = _load_trajectory(args.trajectory)
        else:
            # No trajectory given: play a clean round, hovering each
            # target cell of the chosen layout in order.
            difficulty = DIFFICULTIES.get(args.level)
            if difficulty is None:
                raise ConfigError(f"unknown level: {args.level}")
            layout = layout_round(difficulty, rng_seed=args.layout_seed)
            waypoints = perfect_hover_waypoints(layout, geometry)
        frames = simulate_stream(
            geometry,
            waypoints,
            noise_sigma_us=args.noise_us,
            rate_hz=config.rate_hz,
            rng_seed=args.seed,
        )
        return [encode_stream(frames)]
    if spec.startswith("file:") or spec.startswith("serial:"):
        _, _, path = spec.partition(":")

        def chunks():
            try:
                with open(path, "rb") as fh:
                    while True:
                        block = fh.read(CHUNK_BYTES)
                        if not block:
                            return
                        yield block
            except OSError as exc:
                raise InputClosed(str(exc)) from exc

        if not Path(path).exists():
            raise ConfigError(f"input not found: {path}")
        return chunks()
    raise ConfigError(
        f"--input must be 'sim', 'file:<path>' or 'serial:<device>', got {spec!r}"
    )


def _cmd_simulate(args) -> int:
    geometry = _load_geometry(args.geometry)
    waypoints = _load_trajectory(args.trajectory)
    frames = simulate_stream(
        geometry,
        waypoints,
        noise_sigma_us=args.noise_us,
        rate_hz=args.rate_hz,
        rng_seed=args.seed,
    )
    blob = encode_stream(frames)
    if args.out is None:
        sys.stdout.buffer.write(blob)
        sys.stdout.buffer.flush()
    else:
        Path(args.out).write_bytes(blob)
    print(f"{len(frames)} frames, {len(blob)} bytes", file=sys.stderr)
    return EXIT_OK


def _cmd_play(args) -> int:
    config = load_config(args.config)
    try:
        session = SessionInfo(
            player_id=args.player,
            group=args.group,
            method=METHOD_NAMES[args.method],
            session_index=args.session,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    source = _byte_source(args.input, config, args)
    summary = run_session(
        config,
        source,
        session,
        level=args.level,
        avatar_id=args.avatar,
        layout_seed=args.layout_seed,
        epoch_s=args.epoch,
        max_rounds=args.rounds,
        overwrite_log=args.overwrite,
    )
    print(json.dumps(dataclasses.asdict(summary), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_serve(args) -> int:
    from .server import BindError, serve_ui

    config = load_config(args.config)
    try:
        serve_ui(config, ui_dir=args.ui)
    except BindError as exc:
        raise ConfigError(str(exc)) from exc
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def _resolve_data_dir(arg: Optional[str]) -> str:
    if arg is not None:
        return arg
    import os

    return os.environ.get(DATA_DIR_ENV) or "data"


def _cmd_analyze(args) -> int:
    data_dir = Path(_resolve_data_dir(args.data))
    if not data_dir.is_dir():
        raise ConfigError(f"data directory not found: {data_dir}")
    records = SessionStore(data_dir).read_all()
    measures = tuple(MEASURE_LABELS) if args.measure == "all" else (args.measure,)

    out = Path(args.out)
    if out.suffix == ".json":
        out_dir, report_name = out.parent, out.name
    else:
        out_dir, report_name = out, "report.json"
    paths = write_report(records, out_dir, measures=measures, alpha=args.alpha)
    report_path = paths.report_json
    if report_name != report_path.name:
        report_path = report_path.rename(report_path.with_name(report_name))
    print(f"report: {report_path}")
    print(f"records: {paths.records_csv}")
    for figure in paths.figures:
        print(f"figure: {figure}")
    return EXIT_OK


def _cmd_simulate_study(args) -> int:
    if args.config is None:
        config = StudyConfig()
    else:
        body = _read_json(args.config)
        try:
            config = StudyConfig.from_dict(body)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{args.config}: {exc}") from exc
    count = write_study(args.out, config, rng_seed=args.seed, overwrite=args.overwrite)
    print(f"{count} records in {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aeroselect",
        description="Ultrasonic hand-selection game: simulate, play, serve, analyze.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render a trajectory as a sensor byte stream")
    p.add_argument("--geometry", help="geometry JSON (default: built-in board)")
    p.add_argument("--trajectory", required=True, help="JSON list of [t_ms, x_mm, y_mm]")
    p.add_argument("--noise-us", type=float, default=0.0, help="echo noise sigma in us")
    p.add_argument("--rate-hz", type=float, default=30.0, help="frame rate")
    p.add_argument("--seed", type=int, default=0, help="noise RNG seed")
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("play", help="drive a session from a byte source")
    p.add_argument("--config", help="service config JSON")
    p.add_argument(
        "--input",
        default="sim",
        help="'sim', 'file:<path>' or 'serial:<device>' (default: sim)",
    )
    p.add_argument("--player", required=True, help="player identifier")
    p.add_argument("--group", required=True, choices=["CG", "EG"])
    p.add_argument("--method", required=True, choices=sorted(METHOD_NAMES))
    p.add_argument("--session", type=int, default=1, help="session number, 1..4")
    p.add_argument("--level", default="Beginner", help="scenario level")
    p.add_argument("--layout-seed", type=int, default=0, help="board layout seed")
    p.add_argument("--avatar", type=int, default=0, help="avatar id")
    p.add_argument("--trajectory", help="trajectory JSON for --input sim")
    p.add_argument("--noise-us", type=float, default=0.0, help="sim echo noise sigma")
    p.add_argument("--seed", type=int, default=0, help="sim noise RNG seed")
    p.add_argument("--epoch", type=float, default=0.0, help="log timestamp epoch")
    p.add_argument("--rounds", type=int, default=1, help="rounds to play")
    p.add_argument("--overwrite", action="store_true", help="replace an existing log")
    p.set_defaults(handler=_cmd_play)

    p = sub.add_parser("serve", help="run the message channel and report API")
    p.add_argument("--config", help="service config JSON")
    p.add_argument("--ui", help="static UI directory to serve at /")
    p.set_defaults(handler=_cmd_serve)

    p = sub.add_parser("analyze", help="write the group report and figures")
    p.add_argument("--data", help=f"data directory (default: ${DATA_DIR_ENV} or ./data)")
    p.add_argument(
        "--measure",
        default="all",
        choices=sorted(MEASURE_LABELS) + ["all"],
        help="which measure to report",
    )
    p.add_argument("--out", default="report.json", help="report path or directory")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level")
    p.set_defaults(handler=_cmd_analyze)

    p = sub.add_parser("simulate-study", help="generate a full cohort data set")
    p.add_argument("--config", help="study config JSON (default: built-in cohort)")
    p.add_argument("--seed", type=int, default=0, help="cohort RNG seed")
    p.add_argument("--out", required=True, help="data directory to write")
    p.add_argument("--overwrite", action="store_true", help="replace existing logs")
    p.set_defaults(handler=_cmd_simulate_study)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else EXIT_CONFIG
        return EXIT_OK if code == 0 else EXIT_CONFIG

    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StorageFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # Loaded fine but the data cannot be analyzed or replayed.
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
