"""Append-only persistence for session logs.

One session is one newline-delimited JSON file: the first line is a
header object (schema version, player identity, config snapshot, an
absolute start epoch), and every following line is either a graded
round record or a selection telemetry event.  All in-file timestamps
are milliseconds since session start; only the header carries absolute
time.

The format is deliberately plain: append-only writes, one object per
line, crash recovery by line scanning.  A final line without its
newline is an interrupted write and is dropped on read; everything
before it stays readable.

Layout on disk: ``<data_dir>/<group>/<player_id>/session<k>.ndjson``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterator, Mapping, Optional, Sequence, Union

from .game import SESSIONS_PER_PLAYER, SessionInfo, TrialRecord
from .locate import SelectionEvent

__all__ = [
    "CSV_FIELDS",
    "LogHeader",
    "SCHEMA_VERSION",
    "SessionLog",
    "SessionStore",
    "SessionWriter",
    "StorageFailure",
    "export_csv",
    "log_path",
    "read_log",
]

SCHEMA_VERSION = 1


class StorageFailure(RuntimeError):
    """Raised when a log cannot be written or parsed."""


def _dump(obj: object) -> str:
    # Canonical one-line form: sorted keys, no whitespace.  Identical
    # inputs must serialize to identical bytes.
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class LogHeader:
    """First line of every session log."""

    player_id: str
    group: str
    method: str
    session_index: int
    started_at_epoch_s: float
    schema_version: int = SCHEMA_VERSION
    config: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        # Reuse the record-side identity checks.
        SessionInfo(self.player_id, self.group, self.method, self.session_index)

    def to_dict(self) -> dict:
        return {
            "kind": "header",
            "schema_version": self.schema_version,
            "player_id": self.player_id,
            "group": self.group,
            "method": self.method,
            "session_index": self.session_index,
            "started_at_epoch_s": self.started_at_epoch_s,
            "config": dict(self.config),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "LogHeader":
        if data.get("kind") != "header":
            raise StorageFailure("first line is not a header object")
        return cls(
            player_id=data["player_id"],
            group=data["group"],
            method=data["method"],
            session_index=int(data["session_index"]),
            started_at_epoch_s=float(data["started_at_epoch_s"]),
            schema_version=int(data["schema_version"]),
            config=data.get("config", {}),
        )


@dataclass(frozen=True)
class SessionLog:
    """Parsed contents of one log file."""

    header: LogHeader
    records: tuple[TrialRecord, ...]
    events: tuple[dict, ...]


def log_path(
    data_dir: Union[str, Path], group: str, player_id: str, session_index: int
) -> Path:
    """Canonical location of one session's log."""
    if not 1 <= session_index <= SESSIONS_PER_PLAYER:
        raise ValueError(
            f"session_index must be in 1..{SESSIONS_PER_PLAYER}, got {session_index}"
        )
    return Path(data_dir) / group / player_id / f"session{session_index}.ndjson"


class SessionWriter:
    """Single-owner appender for one session log.

    Every append writes one full line and flushes, so an interrupted
    run loses at most the line being written.
    """

    def __init__(self, path: Union[str, Path], header: LogHeader, *, overwrite: bool = False):
        self.path = Path(path)
        self.header = header
        self._records_written = 0
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            if self.path.exists() and not overwrite:
                raise StorageFailure(f"log already exists: {self.path}")
            self._fh: Optional[IO[str]] = open(
                self.path, "w", encoding="utf-8", newline="\n"
            )
            self._write_line(header.to_dict())
        except OSError as exc:
            raise StorageFailure(f"cannot open {self.path}: {exc}") from exc

    def _write_line(self, obj: object) -> None:
        if self._fh is None:
            raise StorageFailure("writer is closed")
        try:
            self._fh.write(_dump(obj) + "\n")
            self._fh.flush()
        except OSError as exc:
            raise StorageFailure(f"write to {self.path} failed: {exc}") from exc

    def append_record(self, record: TrialRecord) -> int:
        """Append one graded round; returns its zero-based id."""
        if record.session_index != self.header.session_index:
            raise ValueError(
                f"record session_index {record.session_index} does not match "
                f"header session_index {self.header.session_index}"
            )
        if (record.player_id, record.group, record.method) != (
            self.header.player_id,
            self.header.group,
            self.header.method,
        ):
            raise ValueError("record identity does not match the log header")
        payload = {"kind": "record", **record.to_dict()}
        self._write_line(payload)
        rid = self._records_written
        self._records_written += 1
        return rid

    def append_event(self, event: SelectionEvent) -> None:
        """Append one selection telemetry line (session-relative ms)."""
        self._write_line(
            {
                "kind": "event",
                "cell": event.cell.index,
                "committed_at_ms": event.committed_at_ms,
                "dwell_ms": event.dwell_ms,
            }
        )

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "SessionWriter":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def _complete_lines(raw: str) -> list[str]:
    # split("\n") ends with "" when the file closed its last line and
    # with the interrupted tail otherwise; drop that element either way.
    parts = raw.split("\n")
    return [line for line in parts[:-1] if line]


def read_log(path: Union[str, Path]) -> SessionLog:
    """Parse one session log, dropping a trailing partial line.

    Raises StorageFailure when the file is missing, has no complete
    header line, or contains a malformed line before the tail.
    """
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise StorageFailure(f"cannot read {path}: {exc}") from exc

    lines = _complete_lines(raw)
    if not lines:
        raise StorageFailure(f"{path} has no complete header line")
    try:
        header = LogHeader.from_dict(json.loads(lines[0]))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise StorageFailure(f"{path}: bad header: {exc}") from exc

    records: list[TrialRecord] = []
    events: list[dict] = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(line)
            kind = obj.get("kind")
            if kind == "record":
                records.append(TrialRecord.from_dict(obj))
            elif kind == "event":
                events.append(obj)
            else:
                raise ValueError(f"unknown line kind {kind!r}")
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise StorageFailure(f"{path}:{lineno}: bad line: {exc}") from exc
        if records and records[-1].session_index != header.session_index:
            raise StorageFailure(
                f"{path}:{lineno}: record session_index does not match header"
            )
    return SessionLog(header=header, records=tuple(records), events=tuple(events))


class SessionStore:
    """Directory of session logs, queryable across players.

    Reads walk logs in sorted path order so results are deterministic;
    within a log, records keep their append order.
    """

    def __init__(self, data_dir: Union[str, Path]):
        self.data_dir = Path(data_dir)

    def open_writer(self, header: LogHeader, *, overwrite: bool = False) -> SessionWriter:
        path = log_path(
            self.data_dir, header.group, header.player_id, header.session_index
        )
        return SessionWriter(path, header, overwrite=overwrite)

    def read_session(
        self, group: str, player_id: str, session_index: int
    ) -> SessionLog:
        return read_log(log_path(self.data_dir, group, player_id, session_index))

    def iter_logs(self) -> Iterator[SessionLog]:
        for path in sorted(self.data_dir.glob("*/*/session*.ndjson")):
            yield read_log(path)

    def query(
        self,
        *,
        group: Optional[str] = None,
        method: Optional[str] = None,
        session_index: Optional[int] = None,
        player_id: Optional[str] = None,
    ) -> list[TrialRecord]:
        """Records matching the conjunction of the given predicates."""
        out: list[TrialRecord] = []
        for log in self.iter_logs():
            for rec in log.records:
                if group is not None and rec.group != group:
                    continue
                if method is not None and rec.method != method:
                    continue
                if session_index is not None and rec.session_index != session_index:
                    continue
                if player_id is not None and rec.player_id != player_id:
                    continue
                out.append(rec)
        return out

    def read_all(self) -> list[TrialRecord]:
        return self.query()


CSV_FIELDS = (
    "player_id",
    "group",
    "session_index",
    "method",
    "elapsed_s",
    "successes",
    "failures",
    "grade",
    "complete",
)


def export_csv(
    records: Sequence[TrialRecord], dest: Union[str, Path, IO[str]]
) -> int:
    """Write records as CSV (header row first); returns the row count."""
    own = isinstance(dest, (str, Path))
    fh: IO[str]
    if own:
        fh = open(dest, "w", encoding="utf-8", newline="")
    elif isinstance(dest, io.TextIOBase) or hasattr(dest, "write"):
        fh = dest  # caller-owned stream
    else:
        raise TypeError(f"unsupported destination: {dest!r}")
    try:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for rec in records:
            writer.writerow(rec.to_dict())
        return len(records)
    finally:
        if own:
            fh.close()
