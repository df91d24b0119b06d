"""Binary telemetry framing, CRC16-CCITT, and a seeded lossy-link simulator.

Frame layout (all multi-byte fields little-endian):

    SYNC 0xA5 | VER 0x01 | TYPE u8 | LEN u8 | payload | CRC16 lo hi

CRC16-CCITT (poly 0x1021, init 0xFFFF) is computed over TYPE..payload.
Data and Status frames are fire-and-forget notifications; commands are
acknowledged with retry.
"""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass

SYNC = 0xA5
VERSION = 0x01

TYPE_DATA = 0x01
TYPE_STATUS = 0x02
TYPE_CMD_START = 0x10
TYPE_CMD_STOP = 0x11
TYPE_CMD_CONFIG = 0x12
TYPE_ACK = 0x20

_MAX_PAYLOAD = 0x20


class LinkFailureError(Exception):
    """Command unacknowledged after all retries."""


@dataclass(frozen=True)
class Data:
    seq: int
    t_ms: int
    ph_raw: int
    temp_raw: int

    def __post_init__(self) -> None:
        if self.ph_raw > 4095 or self.temp_raw > 4095:
            raise ValueError("raw counts exceed 12-bit range")


@dataclass(frozen=True)
class Status:
    battery_mv: int
    flags: int


@dataclass(frozen=True)
class CmdStart:
    pass


@dataclass(frozen=True)
class CmdStop:
    pass


@dataclass(frozen=True)
class CmdConfig:
    sample_hz: int
    avg_n: int
    ma_window: int


@dataclass(frozen=True)
class Ack:
    cmd: int
    status: int


TelemetryFrame = Data | Status | CmdStart | CmdStop | CmdConfig | Ack

ACK_OK = 0x00


def crc16_ccitt(data: bytes, poly: int = 0x1021, init: int = 0xFFFF) -> int:
    crc = init
    for b in data:
        crc ^= b << 8
        for _ in range(8):
            if crc & 0x8000:
                crc = ((crc << 1) ^ poly) & 0xFFFF
            else:
                crc = (crc << 1) & 0xFFFF
    return crc


def _pack(ftype: int, payload: bytes) -> bytes:
    body = bytes([ftype, len(payload)]) + payload
    crc = crc16_ccitt(body)
    return bytes([SYNC, VERSION]) + body + struct.pack("<H", crc)


def encode(frame: TelemetryFrame) -> bytes:
    """Serialize a frame to its bit-exact wire representation."""
    if isinstance(frame, Data):
        return _pack(
            TYPE_DATA,
            struct.pack("<HIHH", frame.seq, frame.t_ms, frame.ph_raw, frame.temp_raw),
        )
    if isinstance(frame, Status):
        return _pack(TYPE_STATUS, struct.pack("<HB", frame.battery_mv, frame.flags))
    if isinstance(frame, CmdStart):
        return _pack(TYPE_CMD_START, b"")
    if isinstance(frame, CmdStop):
        return _pack(TYPE_CMD_STOP, b"")
    if isinstance(frame, CmdConfig):
        return _pack(
            TYPE_CMD_CONFIG,
            struct.pack("<HBB", frame.sample_hz, frame.avg_n, frame.ma_window),
        )
    if isinstance(frame, Ack):
        return _pack(TYPE_ACK, struct.pack("<BB", frame.cmd, frame.status))
    raise TypeError(f"unknown frame type {type(frame)!r}")


_PAYLOAD_LEN = {
    TYPE_DATA: 10,
    TYPE_STATUS: 3,
    TYPE_CMD_START: 0,
    TYPE_CMD_STOP: 0,
    TYPE_CMD_CONFIG: 4,
    TYPE_ACK: 2,
}


def _parse_payload(ftype: int, payload: bytes) -> TelemetryFrame:
    if ftype == TYPE_DATA:
        seq, t_ms, ph_raw, temp_raw = struct.unpack("<HIHH", payload)
        return Data(seq, t_ms, ph_raw, temp_raw)
    if ftype == TYPE_STATUS:
        battery_mv, flags = struct.unpack("<HB", payload)
        return Status(battery_mv, flags)
    if ftype == TYPE_CMD_START:
        return CmdStart()
    if ftype == TYPE_CMD_STOP:
        return CmdStop()
    if ftype == TYPE_CMD_CONFIG:
        sample_hz, avg_n, ma_window = struct.unpack("<HBB", payload)
        return CmdConfig(sample_hz, avg_n, ma_window)
    seq_cmd, status = struct.unpack("<BB", payload)
    return Ack(seq_cmd, status)


@dataclass(frozen=True)
class Diagnostic:
    offset: int
    reason: str


def decode(stream: bytes) -> tuple[list[TelemetryFrame], list[Diagnostic]]:
    """Scan arbitrary bytes for frames; malformed regions become diagnostics.

    Resynchronizes at the next SYNC byte after any failure; never reads past a
    frame's declared length.
    """
    frames: list[TelemetryFrame] = []
    diags: list[Diagnostic] = []
    i = 0
    n = len(stream)
    garbage_start: int | None = None

    def flush_garbage(end: int) -> None:
        nonlocal garbage_start
        if garbage_start is not None:
            diags.append(Diagnostic(garbage_start, f"no sync in {end - garbage_start} byte(s)"))
            garbage_start = None

    while i < n:
        if stream[i] != SYNC:
            if garbage_start is None:
                garbage_start = i
            i += 1
            continue
        flush_garbage(i)
        if i + 4 > n:
            diags.append(Diagnostic(i, "truncated header"))
            break
        ver, ftype, length = stream[i + 1], stream[i + 2], stream[i + 3]
        if ver != VERSION:
            diags.append(Diagnostic(i, f"bad version 0x{ver:02x}"))
            i += 1
            continue
        if ftype not in _PAYLOAD_LEN or length != _PAYLOAD_LEN[ftype] or length > _MAX_PAYLOAD:
            diags.append(Diagnostic(i, f"bad type/length 0x{ftype:02x}/{length}"))
            i += 1
            continue
        end = i + 4 + length + 2
        if end > n:
            diags.append(Diagnostic(i, "truncated frame"))
            i += 1
            continue
        body = stream[i + 2 : i + 4 + length]
        crc_recv = struct.unpack("<H", stream[i + 4 + length : end])[0]
        if crc16_ccitt(bytes(body)) != crc_recv:
            diags.append(Diagnostic(i, "crc mismatch"))
            i += 1
            continue
        frames.append(_parse_payload(ftype, bytes(stream[i + 4 : i + 4 + length])))
        i = end
    flush_garbage(n)
    return frames, diags


@dataclass(frozen=True)
class LinkParams:
    drop_prob: float = 0.0
    latency_ms: float = 0.0
    jitter_ms: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        # 1.0 permitted so forced-failure paths are testable
        if not (0.0 <= self.drop_prob <= 1.0):
            raise ValueError("drop_prob must be in [0, 1]")
        if self.latency_ms < 0 or self.jitter_ms < 0:
            raise ValueError("latency_ms and jitter_ms must be >= 0")


CMD_RETRIES = 3
CMD_TIMEOUT_MS = 200.0


class LossyLink:
    """Seeded drop/latency/jitter model of the BLE notification link."""

    def __init__(self, params: LinkParams) -> None:
        self.params = params
        self._rng = random.Random(params.seed)
        self.dropped = 0

    def transmit(self, frame: TelemetryFrame, t_now_ms: float) -> tuple[TelemetryFrame, float] | None:
        """Fire-and-forget delivery: None when dropped, else (frame, deliver_at_ms)."""
        if self.params.drop_prob > 0.0 and self._rng.random() < self.params.drop_prob:
            self.dropped += 1
            return None
        delay = self.params.latency_ms
        if self.params.jitter_ms > 0.0:
            delay += self._rng.uniform(0.0, self.params.jitter_ms)
        return frame, t_now_ms + delay

    def send_command(self, frame, t_now_ms: float, responder) -> tuple[Ack, float]:
        """Acknowledged delivery with retry; responder(frame) -> Ack.

        Both the command and its Ack traverse the lossy channel. Raises
        LinkFailureError after the initial attempt plus CMD_RETRIES retries.
        """
        t = t_now_ms
        for _ in range(1 + CMD_RETRIES):
            cmd_lost = self._rng.random() < self.params.drop_prob
            if not cmd_lost:
                ack = responder(frame)
                ack_lost = self._rng.random() < self.params.drop_prob
                if not ack_lost:
                    return ack, t + self.params.latency_ms
            t += CMD_TIMEOUT_MS
        raise LinkFailureError(f"no ack after {CMD_RETRIES} retries")
