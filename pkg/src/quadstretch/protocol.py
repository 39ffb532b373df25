"""Host-to-device byte protocol, servo/PWM translation and a loopback harness.

Frame layout (little-endian, see PROTOCOL.md)::

    0xA5 | device id | seq | payload | checksum

QuadStretcher (id 1) carries four int16 signals in centi-millimetres in D, R,
V, L order (12 bytes per frame).  Squeezer (id 2) carries one int16
contraction in centi-millimetres (6 bytes).  The checksum byte makes the sum
of all frame bytes zero modulo 256.
"""

from __future__ import annotations

import math
import struct
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import SIDES, StretchFrame
from .errors import ChecksumError, InputError, ProtocolError, RangeError, SyncError
from .squeeze import SqueezeCommand
from .trace import Trace

SYNC = 0xA5
QUAD_ID = 1
SQUEEZER_ID = 2
PAYLOAD_SIGNALS = {QUAD_ID: 4, SQUEEZER_ID: 1}
FRAME_LENGTH = {dev: 4 + 2 * n for dev, n in PAYLOAD_SIGNALS.items()}
QUAD_SIGNAL_LIMIT_CMM = 1100  # 11.00 mm
INT16_MIN, INT16_MAX = -32768, 32767


def checksum(data: bytes) -> int:
    return (-sum(data)) & 0xFF


@dataclass(frozen=True)
class CommandFrame:
    """One decoded command.  ``values`` are integer centi-millimetres."""

    device_id: int
    seq: int
    values: tuple[int, ...]

    def __post_init__(self):
        if self.device_id not in PAYLOAD_SIGNALS:
            raise InputError(f"unknown device id {self.device_id}")
        if not 0 <= self.seq <= 0xFF:
            raise RangeError(f"sequence number {self.seq} outside 0..255")
        values = tuple(int(v) for v in self.values)
        if len(values) != PAYLOAD_SIGNALS[self.device_id]:
            raise InputError(f"device {self.device_id} takes {PAYLOAD_SIGNALS[self.device_id]} "
                             f"values, got {len(values)}")
        for v in values:
            if not INT16_MIN <= v <= INT16_MAX:
                raise RangeError(f"value {v} cmm does not fit in int16")
            if self.device_id == QUAD_ID and abs(v) > QUAD_SIGNAL_LIMIT_CMM:
                raise RangeError(f"signal {v / 100:.2f} mm beyond +/-11.00 mm")
        object.__setattr__(self, "values", values)

    @property
    def millimetres(self) -> tuple[float, ...]:
        return tuple(v / 100.0 for v in self.values)

    @classmethod
    def from_stretch(cls, frame: StretchFrame, seq: int) -> "CommandFrame":
        return cls(QUAD_ID, seq & 0xFF, tuple(round(s * 100) for s in frame.signals))

    @classmethod
    def from_squeeze(cls, cmd: SqueezeCommand, seq: int) -> "CommandFrame":
        return cls(SQUEEZER_ID, seq & 0xFF, (round(cmd.contraction * 100),))

    def to_command(self, timestamp: float = 0.0):
        if self.device_id == QUAD_ID:
            return StretchFrame(self.millimetres, timestamp)
        return SqueezeCommand(self.millimetres[0], timestamp)


def encode_frame(frame: CommandFrame) -> bytes:
    n = len(frame.values)
    body = struct.pack(f"<BBB{n}h", SYNC, frame.device_id, frame.seq, *frame.values)
    return body + bytes([checksum(body)])


def _parse(chunk: bytes) -> CommandFrame:
    dev = chunk[1]
    n = PAYLOAD_SIGNALS[dev]
    values = struct.unpack_from(f"<{n}h", chunk, 3)
    return CommandFrame(dev, chunk[2], values)


def decode_frame(data: bytes) -> CommandFrame:
    """Strictly decode exactly one frame."""
    data = bytes(data)
    if len(data) < 2 or data[0] != SYNC:
        raise SyncError("frame does not start with the sync byte")
    if data[1] not in FRAME_LENGTH:
        raise SyncError(f"unknown device id {data[1]}")
    if len(data) != FRAME_LENGTH[data[1]]:
        raise SyncError(f"device {data[1]} frames are {FRAME_LENGTH[data[1]]} bytes, got {len(data)}")
    if sum(data) & 0xFF:
        raise ChecksumError(f"checksum mismatch in frame seq={data[2]}")
    return _parse(data)


def _error(cls, message, offset, nbytes):
    err = cls(message)
    err.offset = offset
    err.nbytes = nbytes
    return err


class FrameDecoder:
    """Incremental decoder for a byte stream of concatenated frames.

    While aligned it consumes one frame-length slot at a time; a slot that
    fails validation is dropped and reported as a ChecksumError (the sum
    covers the sync and id bytes too).  A slot that does not even start with
    the sync byte and a known device id is first searched for an embedded
    valid frame, which handles inserted bytes.  After ``max_bad_slots``
    consecutive bad slots the decoder drops alignment and hunts for the next
    valid frame.
    """

    def __init__(self, max_bad_slots: int = 4):
        self.max_bad_slots = max_bad_slots
        self._buf = bytearray()
        self._base = 0
        self._slot: int | None = None
        self._bad = 0
        self._hunt_start: int | None = None
        self._started = False

    def feed(self, data: bytes) -> list:
        self._buf += data
        return self._drain(final=False)

    def close(self) -> list:
        return self._drain(final=True)

    def _valid_at(self, buf, j) -> int | None:
        """Length of a valid frame at ``j``; 0 if there is none; None if more bytes are needed."""
        if j + 1 >= len(buf):
            return None if buf[j] == SYNC else 0
        if buf[j] != SYNC or buf[j + 1] not in FRAME_LENGTH:
            return 0
        n = FRAME_LENGTH[buf[j + 1]]
        if j + n > len(buf):
            return None
        return n if sum(buf[j:j + n]) & 0xFF == 0 else 0

    def _emit_frame(self, out, buf, i, n):
        try:
            out.append(_parse(bytes(buf[i:i + n])))
        except (InputError, RangeError) as exc:
            out.append(_error(RangeError, f"rejected frame: {exc}", self._base + i, n))

    def _drain(self, final: bool) -> list:
        out: list = []
        buf = self._buf
        i = 0
        if not self._started:
            if len(buf) < 2 and not final:
                return out
            # a stream starts on a frame boundary
            self._started = True
            if len(buf) >= 2 and buf[0] == SYNC and buf[1] in FRAME_LENGTH:
                self._slot = FRAME_LENGTH[buf[1]]
        while i < len(buf):
            if self._slot is None:
                if self._hunt_start is None:
                    self._hunt_start = self._base + i
                j = buf.find(SYNC, i)
                if j < 0:
                    i = len(buf)
                    break
                n = self._valid_at(buf, j)
                if n is None:
                    i = j
                    break
                if n == 0:
                    i = j + 1
                    continue
                skipped = self._base + j - self._hunt_start
                if skipped:
                    out.append(_error(SyncError, f"resynchronised after {skipped} bytes",
                                      self._hunt_start, skipped))
                self._hunt_start = None
                self._slot, self._bad = n, 0
                self._emit_frame(out, buf, j, n)
                i = j + n
                continue

            n = self._valid_at(buf, i)
            if n is None or (n == 0 and len(buf) - i < self._slot):
                break
            if n:
                self._slot, self._bad = n, 0
                self._emit_frame(out, buf, i, n)
                i += n
                continue
            if buf[i] != SYNC or buf[i + 1] not in FRAME_LENGTH:
                realign = None
                for k in range(1, self._slot):
                    m = self._valid_at(buf, i + k) if i + k < len(buf) else None
                    if m is None:
                        realign = "wait"
                        break
                    if m:
                        realign = k
                        break
                if realign == "wait" and not final:
                    break
                if isinstance(realign, int):
                    out.append(_error(SyncError, f"skipped {realign} stray bytes",
                                      self._base + i, realign))
                    i += realign
                    continue
            out.append(_error(ChecksumError, "frame failed checksum; dropped",
                              self._base + i, self._slot))
            i += self._slot
            self._bad += 1
            if self._bad >= self.max_bad_slots:
                self._slot = None
        if final and i < len(buf):
            start = self._hunt_start if self._hunt_start is not None else self._base + i
            out.append(_error(SyncError, f"{self._base + len(buf) - start} trailing bytes without a frame",
                              start, self._base + len(buf) - start))
            self._hunt_start = None
            i = len(buf)
        elif final and self._hunt_start is not None and self._base + i > self._hunt_start:
            out.append(_error(SyncError, "stream ended while hunting for sync",
                              self._hunt_start, self._base + i - self._hunt_start))
            self._hunt_start = None
        del buf[:i]
        self._base += i
        return out


def decode_stream(data: bytes) -> tuple[list[CommandFrame], list[ProtocolError]]:
    dec = FrameDecoder()
    events = dec.feed(data) + dec.close()
    frames = [e for e in events if isinstance(e, CommandFrame)]
    errors = [e for e in events if not isinstance(e, CommandFrame)]
    return frames, errors


def fuzz_decoder(count: int, seed: int = 0, max_len: int = 48) -> dict:
    """Feed ``count`` random buffers to fresh decoders and tally the outcomes.

    Every eighth buffer starts with the sync byte and a valid device id so
    the aligned path is exercised too.
    """
    rng = np.random.default_rng(seed)
    lengths = rng.integers(0, max_len + 1, size=count)
    blob = rng.integers(0, 256, size=int(lengths.sum()), dtype=np.uint8).tobytes()
    stats = {"buffers": count, "frames": 0, "errors": 0, "crashes": 0}
    pos = 0
    for k, n in enumerate(lengths):
        buf = bytearray(blob[pos:pos + n])
        pos += n
        if k % 8 == 0 and n >= 2:
            buf[0], buf[1] = 0xA5, 1 + (k // 8) % 2
        try:
            dec = FrameDecoder()
            for ev in dec.feed(bytes(buf)) + dec.close():
                if isinstance(ev, CommandFrame):
                    stats["frames"] += 1
                elif isinstance(ev, ProtocolError):
                    stats["errors"] += 1
        except ProtocolError:
            stats["errors"] += 1
        except Exception:  # any other exception is a decoder bug
            stats["crashes"] += 1
    return stats


# --- servo and PWM translation ------------------------------------------------------

DEFAULT_PINION_RADIUS = 7.1
PWM_FREQUENCY = 50.0
PWM_COUNTS = 4096
PULSE_CENTER_US = 1500.0
PULSE_HALF_RANGE_US = 1000.0
SERVO_LIMIT_DEG = 90.0


@dataclass(frozen=True)
class PwmSetting:
    channel: int
    on: int
    off: int

    def __post_init__(self):
        if not 0 <= self.channel <= 15:
            raise RangeError(f"channel {self.channel} outside 0..15")
        for name in ("on", "off"):
            if not 0 <= getattr(self, name) < PWM_COUNTS:
                raise RangeError(f"{name} count {getattr(self, name)} outside 0..4095")


def signal_to_servo_angle(signal: float, pinion_radius: float = DEFAULT_PINION_RADIUS,
                          max_travel: float = 11.0) -> float:
    """Pinion rotation (degrees) that moves the rack by ``signal`` mm."""
    if abs(signal) > max_travel:
        raise RangeError(f"signal {signal} mm beyond max travel {max_travel} mm")
    angle = math.degrees(signal / pinion_radius)
    if abs(angle) > SERVO_LIMIT_DEG:
        raise RangeError(f"servo angle {angle:.2f} deg beyond +/-{SERVO_LIMIT_DEG:g} deg "
                         f"(pinion radius {pinion_radius} mm)")
    return angle


def unit_servo_angles(signal: float, pinion_radius: float = DEFAULT_PINION_RADIUS) -> tuple[float, float]:
    """Angles for the two counteracting servos of one stretch unit."""
    a = signal_to_servo_angle(signal, pinion_radius)
    return a, -a


def angle_to_pwm(angle: float, pwm_freq: float = PWM_FREQUENCY, channel: int = 0) -> PwmSetting:
    if not -SERVO_LIMIT_DEG <= angle <= SERVO_LIMIT_DEG:
        raise RangeError(f"angle {angle} deg outside +/-{SERVO_LIMIT_DEG:g} deg")
    pulse_us = PULSE_CENTER_US + angle / SERVO_LIMIT_DEG * PULSE_HALF_RANGE_US
    counts = math.floor(pulse_us * pwm_freq * PWM_COUNTS / 1e6 + 1e-9)
    return PwmSetting(channel, 0, counts)


def pwm_to_angle(counts: int, pwm_freq: float = PWM_FREQUENCY) -> float:
    pulse_us = counts * 1e6 / (pwm_freq * PWM_COUNTS)
    return (pulse_us - PULSE_CENTER_US) / PULSE_HALF_RANGE_US * SERVO_LIMIT_DEG


def pwm_to_signal(counts: int, pinion_radius: float = DEFAULT_PINION_RADIUS,
                  pwm_freq: float = PWM_FREQUENCY) -> float:
    return math.radians(pwm_to_angle(counts, pwm_freq)) * pinion_radius


def frame_to_pwm(frame: StretchFrame, pinion_radius: float = DEFAULT_PINION_RADIUS,
                 pwm_freq: float = PWM_FREQUENCY) -> list[PwmSetting]:
    """Eight servo channels: side k drives channels 2k (+angle) and 2k+1 (-angle)."""
    out = []
    for side in SIDES:
        a, b = unit_servo_angles(frame[side], pinion_radius)
        out.append(angle_to_pwm(a, pwm_freq, 2 * side))
        out.append(angle_to_pwm(b, pwm_freq, 2 * side + 1))
    return out


# --- loopback ----------------------------------------------------------------------

class ByteTransport:
    """In-memory single-writer/single-reader byte pipe."""

    def __init__(self):
        self._chunks: deque[bytes] = deque()

    def write(self, data: bytes) -> None:
        self._chunks.append(bytes(data))

    def read(self, size: int = -1) -> bytes:
        out = bytearray()
        while self._chunks and (size < 0 or len(out) < size):
            chunk = self._chunks.popleft()
            take = len(chunk) if size < 0 else min(len(chunk), size - len(out))
            out += chunk[:take]
            if take < len(chunk):
                self._chunks.appendleft(chunk[take:])
        return bytes(out)


def corrupt_bytes(data: bytes, rate: float, rng: np.random.Generator) -> tuple[bytes, np.ndarray]:
    """Replace each byte with probability ``rate`` by a different random value.

    Returns the corrupted buffer and the indices that were changed.
    """
    arr = np.frombuffer(bytes(data), dtype=np.uint8).copy()
    hit = rng.random(len(arr)) < rate
    masks = rng.integers(1, 256, size=len(arr), dtype=np.uint8)
    arr[hit] ^= masks[hit]
    return arr.tobytes(), np.flatnonzero(hit)


@dataclass
class LoopbackResult:
    sent: int
    applied: list[CommandFrame]
    errors: list[ProtocolError]
    seq_gaps: int  # frames the receiver can tell were lost from sequence numbers
    out_of_order: int
    trace: Trace

    @property
    def dropped_frames(self) -> int:
        return self.sent - len(self.applied)

    @property
    def checksum_errors(self) -> int:
        return sum(isinstance(e, ChecksumError) for e in self.errors)

    @property
    def sync_errors(self) -> int:
        return sum(isinstance(e, SyncError) for e in self.errors)


def _as_frames(frames: Iterable) -> list[CommandFrame]:
    out = []
    for k, f in enumerate(frames):
        if isinstance(f, CommandFrame):
            out.append(f)
        elif isinstance(f, StretchFrame):
            out.append(CommandFrame.from_stretch(f, k))
        elif isinstance(f, SqueezeCommand):
            out.append(CommandFrame.from_squeeze(f, k))
        else:
            raise InputError(f"cannot send {type(f).__name__}")
    return out


def loopback_session(frames: Sequence, device=None, frame_period: float = 0.01,
                     corrupt_rate: float = 0.0, seed: int = 0,
                     chunk_size: int = 7) -> LoopbackResult:
    """Send frames through an in-memory byte pipe into a device simulator.

    Each decoded frame is applied to ``device`` (if given), which then
    advances by ``frame_period``.  Decode errors are collected, never raised.
    Sequence gaps are counted; sequence numbers that step backwards are
    flagged as out of order and still applied in arrival order.
    """
    frames = _as_frames(frames)
    wire = b"".join(encode_frame(f) for f in frames)
    if corrupt_rate > 0:
        wire, _ = corrupt_bytes(wire, corrupt_rate, np.random.default_rng(seed))

    transport = ByteTransport()
    transport.write(wire)
    decoder = FrameDecoder()
    events: list = []
    while True:
        data = transport.read(chunk_size)
        if not data:
            break
        events += decoder.feed(data)
    events += decoder.close()

    columns = ("index", "seq", "flag") + (tuple(device.columns) if device is not None else ())
    trace = Trace(columns)
    applied, errors = [], []
    gaps = out_of_order = 0
    last_seq = None
    t = 0.0
    for ev in events:
        if not isinstance(ev, CommandFrame):
            errors.append(ev)
            continue
        flag = "ok"
        if last_seq is not None:
            gap = (ev.seq - last_seq - 1) & 0xFF
            if gap >= 128:
                flag = "out_of_order"
                out_of_order += 1
            elif gap:
                flag = f"gap{gap}"
                gaps += gap
        if flag != "out_of_order":
            last_seq = ev.seq
        applied.append(ev)
        row: tuple = (len(applied) - 1, ev.seq, flag)
        if device is not None:
            device.command(ev.to_command(t))
            device.advance(frame_period)
            t = len(applied) * frame_period
            row += device.row(t)
        trace.append(row)
    return LoopbackResult(len(frames), applied, errors, gaps, out_of_order, trace)


def annotate_frame(data: bytes) -> str:
    """Hex dump of one frame with its fields labelled."""
    data = bytes(data)
    hexs = " ".join(f"{b:02X}" for b in data)
    try:
        frame = decode_frame(data)
    except ProtocolError as exc:
        return f"{hexs}  ERROR {type(exc).__name__}: {exc}"
    name = "quadstretcher" if frame.device_id == QUAD_ID else "squeezer"
    if frame.device_id == QUAD_ID:
        fields = " ".join(f"{s.letter}={v / 100:+.2f}" for s, v in zip(SIDES, frame.values))
    else:
        fields = f"contraction={frame.values[0] / 100:.2f}"
    return f"{hexs}  sync dev={frame.device_id}({name}) seq={frame.seq} {fields} mm cks={data[-1]:02X}"
