"""HTTP service exposing live risk rankings to the triage dashboard.

One writer, many readers: ingestion and acknowledgment mutate state under a
lock and publish a fresh immutable snapshot; GET handlers read whatever
snapshot is current without blocking. The response to an ingestion is sent
only after the snapshot swap, so a client that GETs after its POST returned
always sees its own data.

State survives restarts as a directory of canonical log files plus a small
JSON file for acknowledged flags; pointing a new service instance at the
same directory reproduces the queue.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .features import apply_scaler, feature_catalog, session_features
from .ingest import (
    EDURANGE,
    KYPO,
    ExerciseMeta,
    SessionRecord,
    clean_records,
    parse_edurange_log,
    parse_kypo_command_log,
    parse_kypo_event_log,
    sessionize,
    to_jsonl,
)
from .risk import ModelBundle, RiskAssessment, rank_students, score_with_bundle

SPARKLINE_BUCKETS = 12
RECENT_COMMAND_COUNT = 10

_COMMANDS_FILE = "commands.jsonl"
_EVENTS_FILE = "events.jsonl"
_STREAMS_FILE = "streams.jsonl"
_STATE_FILE = "state.json"


class IngestError(ValueError):
    """Raised when posted log records cannot be parsed."""


@dataclass(frozen=True)
class Snapshot:
    """Immutable view handed to readers: sessions plus the ranked queue."""

    sessions: dict[str, SessionRecord]
    assessments: tuple[RiskAssessment, ...]
    activity: dict[str, list[int]]

    def assessment_for(self, student_id: str) -> RiskAssessment | None:
        for a in self.assessments:
            if a.student_id == student_id:
                return a
        return None


def _activity_buckets(session: SessionRecord, buckets: int = SPARKLINE_BUCKETS) -> list[int]:
    stamps = [e.timestamp for e in session.commands] + [e.timestamp for e in session.events]
    counts = [0] * buckets
    if not stamps:
        return counts
    span = max(session.end_time - session.start_time, 1)
    for ts in stamps:
        index = min(buckets - 1, (ts - session.start_time) * buckets // span)
        counts[int(index)] += 1
    return counts


class LiveStore:
    """Holds raw entries, the trained bundle, and the published snapshot."""

    def __init__(
        self,
        bundle: ModelBundle,
        meta: ExerciseMeta,
        state_dir: str | Path | None = None,
    ):
        if bundle.platform != meta.platform:
            raise ValueError(
                f"bundle is for {bundle.platform}, exercise is {meta.platform}"
            )
        self.bundle = bundle
        self.meta = meta
        self.state_dir = Path(state_dir) if state_dir is not None else None
        self._lock = threading.Lock()
        self._commands: list = []
        self._events: list = []
        self._acknowledged: dict[str, bool] = {}
        self._snapshot = Snapshot({}, (), {})
        if self.state_dir is not None:
            self.state_dir.mkdir(parents=True, exist_ok=True)
            self._load_state_dir()
        self._rebuild()

    # ---- persistence ----

    def _load_state_dir(self):
        if self.meta.platform == KYPO:
            commands_path = self.state_dir / _COMMANDS_FILE
            events_path = self.state_dir / _EVENTS_FILE
            if commands_path.exists():
                self._commands = parse_kypo_command_log(commands_path.read_text()).entries
            if events_path.exists():
                self._events = parse_kypo_event_log(events_path.read_text()).entries
        else:
            streams_path = self.state_dir / _STREAMS_FILE
            if streams_path.exists():
                self._commands = parse_edurange_log(streams_path.read_text()).entries
        state_path = self.state_dir / _STATE_FILE
        if state_path.exists():
            doc = json.loads(state_path.read_text())
            self._acknowledged = {
                str(k): bool(v) for k, v in doc.get("acknowledged", {}).items()
            }

    def _append_log(self, filename: str, entries: list):
        if self.state_dir is None or not entries:
            return
        with open(self.state_dir / filename, "a") as handle:
            handle.write(to_jsonl(entries) + "\n")

    def _write_state(self):
        if self.state_dir is None:
            return
        payload = json.dumps({"acknowledged": self._acknowledged}, indent=2)
        (self.state_dir / _STATE_FILE).write_text(payload)

    # ---- snapshotting ----

    def _build_snapshot(self, raw_commands: list, raw_events: list) -> Snapshot:
        commands, _ = clean_records(raw_commands)
        events, _ = clean_records(raw_events)
        sessions = sessionize(commands, events, self.meta)
        assessments = []
        activity = {}
        for session in sessions:
            a = score_with_bundle(
                self.bundle,
                session,
                solutions=self.meta.solutions,
                error_patterns=self.meta.error_patterns,
            )
            if self._acknowledged.get(session.student_id, False):
                a = replace(a, acknowledged=True)
            assessments.append(a)
            activity[session.student_id] = _activity_buckets(session)
        return Snapshot(
            sessions={s.student_id: s for s in sessions},
            assessments=tuple(rank_students(assessments)),
            activity=activity,
        )

    def _rebuild(self):
        self._snapshot = self._build_snapshot(self._commands, self._events)

    def snapshot(self) -> Snapshot:
        return self._snapshot

    # ---- mutations ----

    def ingest(self, doc: dict) -> dict:
        """Parse and fold in posted records; returns an ingestion summary."""
        if not isinstance(doc, dict):
            raise IngestError("body must be a JSON object")
        known = {"commands", "events", "streams"}
        if not known & set(doc):
            raise IngestError("body needs 'commands', 'events' or 'streams'")

        def as_lines(key):
            records = doc.get(key, [])
            if not isinstance(records, list):
                raise IngestError(f"{key} must be an array of records")
            return "\n".join(json.dumps(r) for r in records)

        try:
            if self.meta.platform == KYPO:
                if doc.get("streams"):
                    raise IngestError("streams are not accepted for this exercise")
                new_commands = parse_kypo_command_log(as_lines("commands")).entries
                new_events = parse_kypo_event_log(as_lines("events")).entries
            else:
                if doc.get("commands") or doc.get("events"):
                    raise IngestError(
                        "only streams are accepted for this exercise"
                    )
                new_commands = parse_edurange_log(as_lines("streams")).entries
                new_events = []
        except IngestError:
            raise
        except ValueError as exc:
            raise IngestError(str(exc)) from exc

        with self._lock:
            candidate_commands = self._commands + new_commands
            candidate_events = self._events + new_events
            try:
                snapshot = self._build_snapshot(candidate_commands, candidate_events)
            except ValueError as exc:
                raise IngestError(str(exc)) from exc
            self._commands = candidate_commands
            self._events = candidate_events
            if self.meta.platform == KYPO:
                self._append_log(_COMMANDS_FILE, new_commands)
                self._append_log(_EVENTS_FILE, new_events)
            else:
                self._append_log(_STREAMS_FILE, new_commands)
            self._snapshot = snapshot
        return {
            "ingested": len(new_commands) + len(new_events),
            "students": sorted(snapshot.sessions),
        }

    def set_acknowledged(self, student_id: str, flag: bool) -> RiskAssessment | None:
        with self._lock:
            if student_id not in self._snapshot.sessions:
                return None
            self._acknowledged[student_id] = flag
            self._write_state()
            self._rebuild()
            return self._snapshot.assessment_for(student_id)

    # ---- detail view ----

    def session_detail(self, student_id: str) -> dict | None:
        snapshot = self._snapshot
        assessment = snapshot.assessment_for(student_id)
        session = snapshot.sessions.get(student_id)
        if assessment is None or session is None:
            return None
        names = [d.name for d in feature_catalog(session.platform)]
        vector = session_features(
            session, self.meta.solutions, self.meta.error_patterns
        )
        unitized = apply_scaler(
            self.bundle.scaler, np.asarray(vector.values, dtype=float)[np.newaxis, :]
        )[0]
        breakdown = [
            {
                "name": name,
                "value": vector.values[names.index(name)],
                "unitized": float(unitized[names.index(name)]),
                "imputed": bool(vector.imputed[names.index(name)]),
            }
            for name in self.bundle.selected
        ]
        if session.platform == KYPO:
            recent = [
                {
                    "timestamp": c.timestamp,
                    "text": c.command_text,
                    "interpreter": c.interpreter,
                    "task": task,
                }
                for c, task in zip(session.commands, session.command_tasks)
            ][-RECENT_COMMAND_COUNT:]
        else:
            recent = [
                {"timestamp": c.timestamp, "text": c.input_text, "task": c.task_id}
                for c in session.commands
            ][-RECENT_COMMAND_COUNT:]
        row = assessment.to_dict()
        row["recent_activity"] = snapshot.activity.get(student_id, [])
        row["features"] = breakdown
        row["recent_commands"] = recent
        return row

    def model_card(self) -> dict:
        return {
            "kind": self.bundle.model.kind,
            "hyperparameters": self.bundle.model.hyperparameters,
            "platform": self.bundle.platform,
            "threshold": self.bundle.threshold,
            "selected_features": list(self.bundle.selected),
            "metrics": self.bundle.metrics,
        }


class _Handler(BaseHTTPRequestHandler):
    server_version = "rangetriage/0.1"
    protocol_version = "HTTP/1.1"

    @property
    def store(self) -> LiveStore:
        return self.server.store  # type: ignore[attr-defined]

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass

    def _send_json(self, status: int, payload):
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self._send_cors()
        self.end_headers()
        self.wfile.write(body)

    def _send_cors(self):
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")

    def _read_body(self):
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return None
        try:
            return json.loads(raw)
        except json.JSONDecodeError:
            return ValueError("body is not valid JSON")

    def do_OPTIONS(self):
        self.send_response(204)
        self._send_cors()
        self.end_headers()

    def do_GET(self):
        path = self.path.split("?")[0].rstrip("/")
        if path == "/api/sessions":
            snapshot = self.store.snapshot()
            rows = []
            for a in snapshot.assessments:
                row = a.to_dict()
                row["recent_activity"] = snapshot.activity.get(a.student_id, [])
                rows.append(row)
            self._send_json(
                200,
                {"server_time": int(time.time() * 1000), "assessments": rows},
            )
            return
        if path.startswith("/api/sessions/"):
            student_id = path[len("/api/sessions/") :]
            detail = self.store.session_detail(student_id)
            if detail is None:
                self._send_json(404, {"error": f"unknown session {student_id!r}"})
                return
            self._send_json(200, detail)
            return
        if path == "/api/model":
            self._send_json(200, self.store.model_card())
            return
        self._send_json(404, {"error": f"no route for {path!r}"})

    def do_POST(self):
        path = self.path.split("?")[0].rstrip("/")
        body = self._read_body()
        if isinstance(body, ValueError):
            self._send_json(400, {"error": str(body)})
            return
        if path == "/api/ingest":
            if body is None:
                self._send_json(400, {"error": "empty body"})
                return
            try:
                summary = self.store.ingest(body)
            except IngestError as exc:
                self._send_json(400, {"error": str(exc)})
                return
            self._send_json(200, summary)
            return
        if path.startswith("/api/sessions/") and path.endswith("/ack"):
            student_id = path[len("/api/sessions/") : -len("/ack")]
            if not isinstance(body, dict) or "acknowledged" not in body:
                self._send_json(400, {"error": "body needs an 'acknowledged' flag"})
                return
            updated = self.store.set_acknowledged(
                student_id, bool(body["acknowledged"])
            )
            if updated is None:
                self._send_json(404, {"error": f"unknown session {student_id!r}"})
                return
            self._send_json(200, updated.to_dict())
            return
        self._send_json(404, {"error": f"no route for {path!r}"})


class RiskServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address: tuple[str, int], store: LiveStore):
        super().__init__(address, _Handler)
        self.store = store


def serve_forever(store: LiveStore, host: str = "127.0.0.1", port: int = 8765):
    server = RiskServer((host, port), store)
    try:
        server.serve_forever()
    finally:
        server.server_close()


def _interleave(sessions: list[SessionRecord]) -> list[tuple[int, str, object]]:
    items = []
    for s in sessions:
        for c in s.commands:
            items.append((c.timestamp, "command", c))
        for e in s.events:
            items.append((e.timestamp, "event", e))
    items.sort(key=lambda item: item[0])
    return items


def replay_sessions(
    store: LiveStore,
    sessions: list[SessionRecord],
    interval_seconds: float = 2.0,
    chunk_size: int = 5,
    stop: threading.Event | None = None,
):
    """Drip pre-generated sessions into the store, oldest entries first.

    Used by `serve --replay` to demo a live exercise: every interval one
    chunk of entries is ingested, so scores and ranks move while the
    dashboard watches.
    """
    items = _interleave(sessions)
    platform = store.meta.platform
    for i in range(0, len(items), chunk_size):
        if stop is not None and stop.is_set():
            return
        chunk = items[i : i + chunk_size]
        if platform == KYPO:
            doc = {
                "commands": [
                    json.loads(to_jsonl([x[2]])) for x in chunk if x[1] == "command"
                ],
                "events": [
                    json.loads(to_jsonl([x[2]])) for x in chunk if x[1] == "event"
                ],
            }
        else:
            doc = {"streams": [json.loads(to_jsonl([x[2]])) for x in chunk]}
        store.ingest(doc)
        time.sleep(interval_seconds)
