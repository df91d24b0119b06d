"""HTTP service exposing the host recorder for the live operator console.

Endpoints:
    POST /sessions                     start a (simulated) live session
    GET  /sessions                     list sessions
    POST /sessions/{id}/stop           stop recording
    POST /sessions/{id}/annotations    mark an experimental phase
    GET  /sessions/{id}/export?format= jsonl | csv
    GET  /sessions/{id}/stream         server-sent events (sample/annotation/gap)
    GET  /healthz

A started session is driven by a background thread that replays the
scenario's precomputed device frames through the link at `speed` times real
time (speed = 0 drains as fast as possible).
"""

from __future__ import annotations

import json
import queue
import threading
import time
from dataclasses import asdict

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import PlainTextResponse, Response, StreamingResponse
from pydantic import BaseModel

from . import protocol
from .host import Annotation, HostError, SessionStore, ValidationError
from .scenario import Scenario, scenario_from_dict
from .simulate import VirtualNode, generate_frames


class LiveDriver(threading.Thread):
    """Feeds precomputed frames into a session at scaled real time."""

    def __init__(self, session, scenario: Scenario, speed: float) -> None:
        super().__init__(daemon=True)
        self.session = session
        self.scenario = scenario
        self.speed = speed
        self._stop_event = threading.Event()

    def cancel(self) -> None:
        self._stop_event.set()

    def run(self) -> None:
        batch = generate_frames(self.scenario)
        link = protocol.LossyLink(self.scenario.link)
        t_wall0 = time.monotonic()
        for i in range(len(batch)):
            if self._stop_event.is_set() or self.session.state != "recording":
                break
            frame = batch.frame(i)
            if self.speed > 0:
                due = t_wall0 + frame.t_ms / 1000.0 / self.speed
                delay = due - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
            result = link.transmit(frame, float(frame.t_ms))
            if result is None:
                continue
            delivered, deliver_at = result
            self.session.ingest_frame(delivered, self.session.recv_time(deliver_at))
        if self.session.state == "recording":
            self.session.stop()


class StartSessionBody(BaseModel):
    scenario: dict = {}
    device_info: str = "virtual-node"
    speed: float = 1.0


class AnnotationBody(BaseModel):
    label: str
    t_start_ms: int
    t_end_ms: int
    expected_ph: float | None = None


def create_app(store: SessionStore | None = None) -> FastAPI:
    store = store or SessionStore()
    drivers: dict[str, LiveDriver] = {}
    app = FastAPI(title="phtelem daq host")
    app.state.store = store

    def get_session(session_id: str):
        try:
            return store.get(session_id)
        except ValidationError as e:
            raise HTTPException(status_code=404, detail=str(e)) from e

    @app.get("/healthz", response_class=PlainTextResponse)
    def healthz() -> str:
        return "ok"

    @app.post("/sessions", status_code=201)
    def start_session(body: StartSessionBody) -> dict:
        scenario = scenario_from_dict(body.scenario)
        node = VirtualNode(scenario)
        link = protocol.LossyLink(scenario.link)

        def send_command(frame):
            ack, _ = link.send_command(frame, 0.0, node.handle_command)
            return ack

        try:
            session = store.start_session(
                config=scenario.session_config(),
                device_info=body.device_info,
                command_sender=send_command,
            )
        except protocol.LinkFailureError as e:
            raise HTTPException(status_code=502, detail=str(e)) from e
        except HostError as e:
            raise HTTPException(status_code=409, detail=str(e)) from e
        driver = LiveDriver(session, scenario, body.speed)
        drivers[session.id] = driver
        driver.start()
        return _session_summary(session)

    @app.get("/sessions")
    def list_sessions() -> list[dict]:
        return [_session_summary(s) for s in store.list_sessions()]

    @app.post("/sessions/{session_id}/stop")
    def stop_session(session_id: str) -> dict:
        session = get_session(session_id)
        driver = drivers.pop(session_id, None)
        if driver is not None:
            driver.cancel()
            driver.join(timeout=5.0)
        session.stop()
        return _session_summary(session)

    @app.post("/sessions/{session_id}/annotations", status_code=201)
    def add_annotation(session_id: str, body: AnnotationBody) -> dict:
        session = get_session(session_id)
        try:
            annotation = Annotation(
                label=body.label,
                t_start_ms=body.t_start_ms,
                t_end_ms=body.t_end_ms,
                expected_ph=body.expected_ph,
            )
        except ValidationError as e:
            raise HTTPException(status_code=422, detail=str(e)) from e
        session.add_annotation(annotation)
        return asdict(annotation)

    @app.get("/sessions/{session_id}/export")
    def export_session(session_id: str, format: str = "jsonl") -> Response:
        session = get_session(session_id)
        try:
            payload = session.export(format)
        except HostError as e:
            raise HTTPException(status_code=409, detail=str(e)) from e
        media = "application/x-ndjson" if format == "jsonl" else "text/csv"
        return Response(content=payload, media_type=media)

    @app.get("/sessions/{session_id}/stream")
    async def stream(session_id: str, request: Request, since_t_ms: int = -1):
        session = get_session(session_id)

        def event_source():
            q = session.subscribe()
            try:
                # replay history past the resume point, then go live
                replayed_to = since_t_ms
                for s in list(session.samples):
                    if s.t_ms > since_t_ms:
                        yield _sse("sample", asdict(s))
                        replayed_to = max(replayed_to, s.t_ms)
                for a in list(session.annotations):
                    yield _sse("annotation", asdict(a))
                while True:
                    try:
                        item = q.get(timeout=1.0)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        continue
                    if item["event"] == "sample" and item["data"]["t_ms"] <= replayed_to:
                        continue
                    yield _sse(item["event"], item["data"])
                    if item["event"] == "stopped":
                        break
            finally:
                session.unsubscribe(q)

        return StreamingResponse(event_source(), media_type="text/event-stream")

    return app


def _sse(event: str, data: dict) -> str:
    return f"event: {event}\ndata: {json.dumps(data, sort_keys=True)}\n\n"


def _session_summary(session) -> dict:
    return {
        "id": session.id,
        "state": session.state,
        "start_utc": session.start_utc,
        "device_info": session.device_info,
        "n_samples": len(session.samples),
        "n_annotations": len(session.annotations),
    }
