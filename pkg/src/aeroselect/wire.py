"""Serial frame codec for the 3-sensor ultrasound array, plus a software simulator.

Wire format (11 bytes, little-endian):

    offset  0   1    2     3..8              9         10
            0xAA 0x55 seq  3 x u16 echo_us   checksum  0x0A

``seq`` is a rolling u8 counter, the three echo times are round-trip
microseconds in fixed sensor order (left, center, right), and ``checksum``
is the XOR of bytes 2..9.  Echo times above 60000 us (~10 m round trip)
are out of band and rejected at parse time.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

SYNC = b"\xaa\x55"
TERMINATOR = 0x0A
FRAME_SIZE = 11
MAX_ECHO_US = 60000

SPEED_OF_SOUND_MM_PER_US = 0.343  # 343 m/s at 20 C


class FrameError(Exception):
    """Base for parse failures. ``consumed`` is how many buffer bytes the
    caller may safely discard before retrying."""

    def __init__(self, message: str, consumed: int = 0):
        super().__init__(message)
        self.consumed = consumed


class ChecksumMismatch(FrameError):
    """Frame trailer (XOR checksum or terminator) failed validation."""


class OutOfRangeEcho(FrameError):
    """Well-formed frame carrying an echo time above MAX_ECHO_US."""


class IncompleteFrame(FrameError):
    """Buffer ends before a complete frame; feed more bytes."""


class TrajectoryOutOfBounds(ValueError):
    """Simulated hand path leaves the board rectangle."""


class SingularGeometry(ValueError):
    """Sensor placement cannot localize points over the board."""


@dataclass(frozen=True)
class RangeFrame:
    """One timestamped triple of echo round-trip times.

    ``rx_time_ms`` is reception metadata (host clock, ms since session
    start); it is not carried on the wire and is excluded from equality.
    """

    seq: int
    echo_us: tuple[int, int, int]
    rx_time_ms: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if not 0 <= self.seq <= 255:
            raise ValueError(f"seq must be a u8, got {self.seq}")
        if len(self.echo_us) != 3:
            raise ValueError("exactly three echo times required")
        for e in self.echo_us:
            if not 0 <= e <= MAX_ECHO_US:
                raise ValueError(f"echo_us out of band: {e}")


def xor_checksum(payload: bytes) -> int:
    c = 0
    for b in payload:
        c ^= b
    return c


def encode_frame(frame: RangeFrame) -> bytes:
    """Encode a frame to its 11-byte wire representation."""
    payload = struct.pack("<BHHH", frame.seq, *frame.echo_us)
    return SYNC + payload + bytes([xor_checksum(payload), TERMINATOR])


def parse_frame(data: bytes | bytearray, rx_time_ms: float = 0.0) -> tuple[RangeFrame, int]:
    """Scan ``data`` for the first valid frame.

    Returns ``(frame, consumed)`` where ``consumed`` counts every byte up to
    and including the frame. Raises a FrameError whose ``consumed`` tells the
    caller how far to advance: IncompleteFrame to wait for more bytes,
    ChecksumMismatch / OutOfRangeEcho to drop a corrupt frame and resume
    scanning after its sync word.
    """
    buf = bytes(data)
    start = buf.find(SYNC)
    if start < 0:
        # Everything can go except a trailing 0xAA that may begin a sync.
        keep = 1 if buf and buf[-1] == SYNC[0] else 0
        raise IncompleteFrame("no sync word", consumed=len(buf) - keep)
    if len(buf) - start < FRAME_SIZE:
        raise IncompleteFrame("partial frame after sync", consumed=start)

    raw = buf[start : start + FRAME_SIZE]
    payload = raw[2:9]
    if raw[9] != xor_checksum(payload) or raw[10] != TERMINATOR:
        raise ChecksumMismatch("bad checksum or terminator", consumed=start + 2)
    seq, e0, e1, e2 = struct.unpack("<BHHH", payload)
    if max(e0, e1, e2) > MAX_ECHO_US:
        raise OutOfRangeEcho(
            f"echo beyond {MAX_ECHO_US} us", consumed=start + FRAME_SIZE
        )
    frame = RangeFrame(seq=seq, echo_us=(e0, e1, e2), rx_time_ms=rx_time_ms)
    return frame, start + FRAME_SIZE

class FrameDecoder:
    """Stateful stream reader: buffers bytes, yields accepted frames.

    Single producer / single consumer. Tracks drop counters and seq gaps
    (gaps are detectable, not fatal).
    """

    def __init__(self):
        self._buf = bytearray()
        self._last_seq: int | None = None
        self.frames_accepted = 0
        self.checksum_drops = 0
        self.range_drops = 0
        self.seq_gaps = 0

    def feed(self, data: bytes, rx_time_ms: float = 0.0) -> list[RangeFrame]:
        """Append ``data`` and return every frame completed by it."""
        self._buf.extend(data)
        out: list[RangeFrame] = []
        while True:
            try:
                frame, consumed = parse_frame(self._buf, rx_time_ms=rx_time_ms)
            except IncompleteFrame as err:
                del self._buf[: err.consumed]
                break
            except ChecksumMismatch as err:
                self.checksum_drops += 1
                del self._buf[: err.consumed]
                continue
            except OutOfRangeEcho as err:
                self.range_drops += 1
                del self._buf[: err.consumed]
                continue
            del self._buf[:consumed]
            if self._last_seq is not None and (self._last_seq + 1) % 256 != frame.seq:
                self.seq_gaps += 1
            self._last_seq = frame.seq
            self.frames_accepted += 1
            out.append(frame)
        return out


@dataclass(frozen=True)
class SensorGeometry:
    """Sensor placement in the board frame (origin top-left, x right, y down),
    all lengths in millimeters."""

    positions: tuple[tuple[float, float], tuple[float, float], tuple[float, float]]
    board_width_mm: float
    board_height_mm: float
    speed_of_sound_mm_per_us: float = SPEED_OF_SOUND_MM_PER_US

    # Condition limit for the range-residual normal matrix at the board
    # center; beyond this no reliable 2-D fix exists over the board.
    _COND_LIMIT = 1e8

    def __post_init__(self):
        if self.board_width_mm <= 0 or self.board_height_mm <= 0:
            raise ValueError("board dimensions must be positive")
        if self.speed_of_sound_mm_per_us <= 0:
            raise ValueError("speed of sound must be positive")
        pts = [np.asarray(p, dtype=float) for p in self.positions]
        if len(pts) != 3:
            raise ValueError("exactly three sensors required")
        for i in range(3):
            for j in range(i + 1, 3):
                if np.allclose(pts[i], pts[j]):
                    raise SingularGeometry("sensor positions must be pairwise distinct")
        center = np.array([self.board_width_mm / 2.0, self.board_height_mm / 2.0])
        jac = np.empty((3, 2))
        for i, p in enumerate(pts):
            d = center - p
            norm = np.linalg.norm(d)
            if norm == 0.0:
                raise SingularGeometry("sensor placed on the board center")
            jac[i] = d / norm
        normal = jac.T @ jac
        if np.linalg.cond(normal) > self._COND_LIMIT:
            raise SingularGeometry(
                "range normal matrix is singular at the board center"
            )

    @property
    def sensor_array(self) -> np.ndarray:
        return np.asarray(self.positions, dtype=float)

    def distances_from(self, point) -> np.ndarray:
        """Euclidean distance from ``point`` to each sensor, mm."""
        return np.linalg.norm(self.sensor_array - np.asarray(point, float), axis=1)

    def echo_us_from(self, point) -> np.ndarray:
        """Noise-free round-trip echo times for a hand at ``point``."""
        return 2.0 * self.distances_from(point) / self.speed_of_sound_mm_per_us

    def contains(self, point) -> bool:
        x, y = float(point[0]), float(point[1])
        return 0.0 <= x <= self.board_width_mm and 0.0 <= y <= self.board_height_mm

    def to_dict(self) -> dict:
        return {
            "sensors": [list(p) for p in self.positions],
            "board_width_mm": self.board_width_mm,
            "board_height_mm": self.board_height_mm,
            "speed_of_sound_mm_per_us": self.speed_of_sound_mm_per_us,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SensorGeometry":
        sensors = tuple(tuple(float(v) for v in p) for p in d["sensors"])
        return cls(
            positions=sensors,  # type: ignore[arg-type]
            board_width_mm=float(d["board_width_mm"]),
            board_height_mm=float(d["board_height_mm"]),
            speed_of_sound_mm_per_us=float(
                d.get("speed_of_sound_mm_per_us", SPEED_OF_SOUND_MM_PER_US)
            ),
        )


def default_geometry(width_mm: float = 300.0, height_mm: float = 300.0) -> SensorGeometry:
    """Tabletop board with sensors along the top edge at x = 0, W/2, W."""
    return SensorGeometry(
        positions=((0.0, 0.0), (width_mm / 2.0, 0.0), (width_mm, 0.0)),
        board_width_mm=width_mm,
        board_height_mm=height_mm,
    )


def sample_trajectory(
    waypoints: list[tuple[float, float, float]], rate_hz: float
) -> list[tuple[float, float, float]]:
    """Resample a piecewise-linear (t_ms, x, y) path at ``rate_hz``.

    Samples run from t=0 through the last waypoint time inclusive.
    """
    if rate_hz <= 0:
        raise ValueError("rate_hz must be positive")
    if not waypoints:
        raise ValueError("trajectory needs at least one waypoint")
    pts = sorted((float(t), float(x), float(y)) for t, x, y in waypoints)
    times = np.array([p[0] for p in pts])
    xs = np.array([p[1] for p in pts])
    ys = np.array([p[2] for p in pts])
    step_ms = 1000.0 / rate_hz
    # Epsilon keeps the final waypoint's sample when T/step rounds just
    # below an integer.
    n = int(math.floor(times[-1] / step_ms + 1e-9)) + 1
    sample_t = np.arange(n) * step_ms
    return list(
        zip(
            sample_t.tolist(),
            np.interp(sample_t, times, xs).tolist(),
            np.interp(sample_t, times, ys).tolist(),
        )
    )


def simulate_stream(
    geometry: SensorGeometry,
    waypoints: list[tuple[float, float, float]],
    noise_sigma_us: float = 0.0,
    rate_hz: float = 30.0,
    rng_seed: int = 0,
) -> list[RangeFrame]:
    """Emit the frame sequence a real sensor array would produce for a hand
    following ``waypoints`` (piecewise-linear (t_ms, x_mm, y_mm) path).

    Echo times follow the time-of-flight forward model
    ``echo = 2 * distance / c`` with optional Gaussian timing noise, rounded
    to whole microseconds and clamped to the wire band. Deterministic for a
    given ``rng_seed``.
    """
    if noise_sigma_us < 0:
        raise ValueError("noise_sigma_us must be nonnegative")
    for t, x, y in waypoints:
        if not geometry.contains((x, y)):
            raise TrajectoryOutOfBounds(
                f"waypoint ({x}, {y}) outside {geometry.board_width_mm} x "
                f"{geometry.board_height_mm} board"
            )
    rng = np.random.default_rng(rng_seed)
    frames = []
    for k, (t_ms, x, y) in enumerate(sample_trajectory(waypoints, rate_hz)):
        echo = geometry.echo_us_from((x, y))
        if noise_sigma_us > 0:
            echo = echo + rng.normal(0.0, noise_sigma_us, size=3)
        quantized = np.clip(np.rint(echo), 0, MAX_ECHO_US).astype(int)
        frames.append(
            RangeFrame(seq=k % 256, echo_us=tuple(quantized), rx_time_ms=t_ms)
        )
    return frames


def encode_stream(frames: list[RangeFrame]) -> bytes:
    """Concatenate the wire encoding of ``frames``."""
    return b"".join(encode_frame(f) for f in frames)
