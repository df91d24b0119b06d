"""Host-side acquisition: sessions, frame ingestion, annotations, persistence.

Sessions record Data frames arriving over the link, detect duplicates and
sequence gaps (mod 2^16), convert raw counts to engineering units, and export
to JSONL (full log) or CSV (samples only). Exports are byte-stable.
"""

from __future__ import annotations

import io
import json
import queue
import threading
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta, timezone

from . import device as dev
from . import protocol
from .firmware import FirmwareConfig

EXPORT_VERSION = 1


class HostError(Exception):
    pass


class DeviceBusyError(HostError):
    pass


class SessionStateError(HostError):
    pass


class ValidationError(HostError):
    pass


@dataclass(frozen=True)
class SessionConfig:
    """Snapshot of device configuration needed to interpret raw counts."""

    firmware: FirmwareConfig = field(default_factory=FirmwareConfig)
    afe: dev.AfeParams = field(default_factory=dev.AfeParams)
    temp_v25_mv: float = dev.TEMP_V25_MV
    temp_k_mv_per_c: float = dev.TEMP_K_MV_PER_C

    def to_dict(self) -> dict:
        return {
            "firmware": asdict(self.firmware),
            "afe": asdict(self.afe),
            "temp_v25_mv": self.temp_v25_mv,
            "temp_k_mv_per_c": self.temp_k_mv_per_c,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SessionConfig":
        return cls(
            firmware=FirmwareConfig(**d["firmware"]),
            afe=dev.AfeParams(**d["afe"]),
            temp_v25_mv=d["temp_v25_mv"],
            temp_k_mv_per_c=d["temp_k_mv_per_c"],
        )


@dataclass(frozen=True)
class SampleRecord:
    seq: int
    t_ms: int
    recv_utc: str
    ph_raw: int
    temp_raw: int
    ph_mv: float
    temp_c: float


@dataclass(frozen=True)
class Annotation:
    label: str
    t_start_ms: int
    t_end_ms: int
    expected_ph: float | None = None

    def __post_init__(self) -> None:
        if not self.label:
            raise ValidationError("annotation label must be non-empty")
        if self.t_start_ms >= self.t_end_ms:
            raise ValidationError("annotation span must have t_start < t_end")


@dataclass(frozen=True)
class GapEvent:
    t_ms: int
    after_seq: int
    missing: int


@dataclass(frozen=True)
class IngestOutcome:
    kind: str  # stored | duplicate | gap
    gap: int = 0


def _iso_utc(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%f")[:-3] + "Z"


def _parse_utc(s: str) -> datetime:
    return datetime.strptime(s, "%Y-%m-%dT%H:%M:%S.%fZ").replace(tzinfo=timezone.utc)


class Session:
    """One recorded measurement: samples, annotations, gap events."""

    def __init__(
        self,
        session_id: str,
        config: SessionConfig,
        device_info: str,
        start_utc: str,
    ) -> None:
        self.id = session_id
        self.config = config
        self.device_info = device_info
        self.start_utc = start_utc
        self.state = "recording"
        self.samples: list[SampleRecord] = []
        self.annotations: list[Annotation] = []
        self.gaps: list[GapEvent] = []
        self.duplicates = 0
        self._next_seq = 0  # device resets its counter on CmdStart
        self._unwrapped = -1
        self._lock = threading.Lock()
        self._subscribers: list[queue.Queue] = []

    # -- live stream -------------------------------------------------------

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self._lock:
            self._subscribers.append(q)
            if self.state == "stopped":
                q.put({"event": "stopped", "data": {"session": self.id}})
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def _publish(self, event: str, data: dict) -> None:
        for q in self._subscribers:
            q.put({"event": event, "data": data})

    # -- recording ---------------------------------------------------------

    def recv_time(self, deliver_at_ms: float) -> str:
        start = _parse_utc(self.start_utc)
        return _iso_utc(start + timedelta(milliseconds=deliver_at_ms))

    def ingest_frame(self, frame: protocol.Data, recv_utc: str) -> IngestOutcome:
        if self.state != "recording":
            raise SessionStateError(f"session {self.id} is not recording")
        with self._lock:
            delta = (frame.seq - self._next_seq) & 0xFFFF
            if delta >= 0x8000:
                # duplicate or late replay of an already-covered seq
                self.duplicates += 1
                return IngestOutcome("duplicate")
            outcome = IngestOutcome("stored")
            if delta > 0:
                gap = GapEvent(t_ms=frame.t_ms, after_seq=(self._next_seq - 1) & 0xFFFF, missing=delta)
                self.gaps.append(gap)
                outcome = IngestOutcome("gap", delta)
                self._publish("gap", asdict(gap))
            self._next_seq = (frame.seq + 1) & 0xFFFF
            self._unwrapped += delta + 1
            record = SampleRecord(
                seq=frame.seq,
                t_ms=frame.t_ms,
                recv_utc=recv_utc,
                ph_raw=frame.ph_raw,
                temp_raw=frame.temp_raw,
                ph_mv=dev.counts_to_mv(frame.ph_raw, self.config.afe),
                temp_c=dev.temp_from_mv(
                    dev.counts_to_sensor_mv(frame.temp_raw, self.config.afe),
                    self.config.temp_v25_mv,
                    self.config.temp_k_mv_per_c,
                ),
            )
            self.samples.append(record)
            self._publish("sample", asdict(record))
            return outcome

    def add_annotation(self, annotation: Annotation) -> Annotation:
        with self._lock:
            self.annotations.append(annotation)
            self._publish("annotation", asdict(annotation))
        return annotation

    def stop(self) -> None:
        with self._lock:
            if self.state == "stopped":
                return
            self.state = "stopped"
            self._publish("stopped", {"session": self.id})

    # -- persistence ---------------------------------------------------------

    def _log_records(self) -> list[tuple[tuple, dict]]:
        records: list[tuple[tuple, dict]] = []
        for g in self.gaps:
            records.append(((g.t_ms, 0, g.after_seq), {"type": "gap", **asdict(g)}))
        for s in self.samples:
            records.append(((s.t_ms, 1, s.seq), {"type": "sample", **asdict(s)}))
        for i, a in enumerate(self.annotations):
            records.append(((a.t_start_ms, 2, i), {"type": "annotation", **asdict(a)}))
        records.sort(key=lambda r: r[0])
        return records

    def export(self, fmt: str = "jsonl") -> bytes:
        if self.state != "stopped":
            raise SessionStateError("stop the session before exporting")
        if fmt == "jsonl":
            return self._export_jsonl()
        if fmt == "csv":
            return self._export_csv()
        raise ValidationError(f"unknown export format {fmt!r}")

    def _export_jsonl(self) -> bytes:
        header = {
            "version": EXPORT_VERSION,
            "session": {
                "id": self.id,
                "start_utc": self.start_utc,
                "device_info": self.device_info,
                "state": self.state,
            },
            "config": self.config.to_dict(),
        }
        out = io.StringIO()
        out.write(json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
        for _, rec in self._log_records():
            out.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")
        return out.getvalue().encode()

    def _export_csv(self) -> bytes:
        lines = ["seq,t_ms,recv_utc,ph_raw,temp_raw,ph_mv,temp_c"]
        for s in self.samples:
            lines.append(
                f"{s.seq},{s.t_ms},{s.recv_utc},{s.ph_raw},{s.temp_raw},{s.ph_mv!r},{s.temp_c!r}"
            )
        return ("\n".join(lines) + "\n").encode()


def import_session(data: bytes) -> Session:
    """Rebuild a Session from a JSONL export (export -> import -> export is a fixed point)."""
    lines = data.decode().splitlines()
    if not lines:
        raise ValidationError("empty session file")
    header = json.loads(lines[0])
    if header.get("version") != EXPORT_VERSION:
        raise ValidationError(f"unsupported session file version {header.get('version')!r}")
    meta = header["session"]
    session = Session(
        session_id=meta["id"],
        config=SessionConfig.from_dict(header["config"]),
        device_info=meta["device_info"],
        start_utc=meta["start_utc"],
    )
    for line in lines[1:]:
        rec = json.loads(line)
        kind = rec.pop("type")
        if kind == "sample":
            session.samples.append(SampleRecord(**rec))
        elif kind == "annotation":
            session.annotations.append(Annotation(**rec))
        elif kind == "gap":
            session.gaps.append(GapEvent(**rec))
        else:
            raise ValidationError(f"unknown record type {kind!r}")
    session.state = meta["state"]
    return session


class SessionStore:
    """In-memory registry of sessions; one recording session per device."""

    def __init__(self) -> None:
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._counter = 0

    def start_session(
        self,
        config: SessionConfig,
        device_info: str,
        command_sender=None,
        session_id: str | None = None,
        start_utc: str | None = None,
    ) -> Session:
        """Create a recording session; configures and starts the device first.

        command_sender(frame) -> Ack, raising LinkFailureError when the link
        is down; no session is created in that case.
        """
        with self._lock:
            for s in self._sessions.values():
                if s.device_info == device_info and s.state == "recording":
                    raise DeviceBusyError(f"device {device_info!r} already recording")
            if command_sender is not None:
                fw = config.firmware
                command_sender(protocol.CmdConfig(fw.sample_hz, fw.avg_n, fw.ma_window))
                command_sender(protocol.CmdStart())
            if session_id is None:
                self._counter += 1
                session_id = f"session-{self._counter:04d}"
            if session_id in self._sessions:
                raise ValidationError(f"session id {session_id!r} already exists")
            if start_utc is None:
                start_utc = _iso_utc(datetime.now(timezone.utc))
            session = Session(session_id, config, device_info, start_utc)
            self._sessions[session_id] = session
            return session

    def get(self, session_id: str) -> Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise ValidationError(f"unknown session {session_id!r}") from None

    def list_sessions(self) -> list[Session]:
        return list(self._sessions.values())
