"""Exercise-log ingestion: canonical JSONL parsing, cleaning, sessionization.

Two log families are supported. ``kypo_style`` platforms emit separate shell
command logs and web event logs keyed by student (or sandbox) id;
``edurange_style`` platforms emit a single terminal stream log with per-entry
task ids. Everything arrives as newline-delimited JSON records in the formats
documented on the parse functions below.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from typing import Callable, Iterable

from .commands import SolutionSpec, load_solution_specs

KYPO = "kypo_style"
EDURANGE = "edurange_style"
PLATFORMS = (KYPO, EDURANGE)

INTERPRETERS = ("shell", "msf")

EVENT_KINDS = (
    "training_started",
    "level_started",
    "correct_answer",
    "wrong_answer",
    "solution_displayed",
    "level_completed",
    "training_completed",
)
ANSWER_KINDS = ("correct_answer", "wrong_answer")

# Wire name -> kind. Canonical names are the kinds upper-snake-cased; a couple
# of platform-export spellings are accepted as aliases.
_EVENT_NAMES = {kind.upper(): kind for kind in EVENT_KINDS}
_EVENT_NAMES["WRONG_ANSWER_SUBMITTED"] = "wrong_answer"
_EVENT_NAMES["CORRECT_ANSWER_SUBMITTED"] = "correct_answer"

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


class LogParseError(ValueError):
    """A malformed record in a log stream; carries the 1-based line number."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class SessionizeError(ValueError):
    """Entries that cannot be grouped into sessions under the given metadata."""


@dataclass(frozen=True)
class CommandEntry:
    """One executed command from a kypo_style command log."""

    student_id: str
    timestamp: int  # ms since epoch, UTC
    interpreter: str  # "shell" | "msf"
    command_text: str
    working_dir: str | None = None


@dataclass(frozen=True)
class EventEntry:
    """One web event from a kypo_style event log."""

    student_id: str
    timestamp: int
    exercise_id: str
    task_index: int  # 1-based
    kind: str
    answer_text: str | None = None


@dataclass(frozen=True)
class StreamEntry:
    """One terminal interaction from an edurange_style stream log."""

    student_id: str
    course_id: str
    task_id: str
    timestamp: int
    input_text: str
    output_text: str


@dataclass
class ParseResult:
    """Parsed entries plus (line_no, reason) pairs skipped in lenient mode."""

    entries: list
    skipped: list[tuple[int, str]] = field(default_factory=list)


@dataclass
class ExerciseMeta:
    """Static description of one exercise run.

    ``sandbox_to_student`` applies to kypo_style command logs only: when
    non-empty, every command's student_id field is treated as a sandbox id and
    must resolve through the map. ``solutions`` (edurange_style) maps task_id
    to the accepted solution commands for that task.
    """

    exercise_id: str
    task_count: int
    platform: str
    sandbox_to_student: dict[str, str] = field(default_factory=dict)
    solutions: dict[str, list[SolutionSpec]] = field(default_factory=dict)
    error_patterns: list[str] | None = None

    def __post_init__(self):
        if self.platform not in PLATFORMS:
            raise ValueError(f"unknown platform {self.platform!r}")
        if self.task_count < 1:
            raise ValueError("task_count must be >= 1")


@dataclass
class SessionRecord:
    """All activity of one student in one exercise, time-ordered.

    ``command_tasks`` runs parallel to ``commands``: the attributed task index
    (kypo_style, 1-based int) or task id (edurange_style, str), with None for
    commands that fall outside any task window (orphans, kept but flagged).
    """

    platform: str
    student_id: str
    exercise_id: str
    task_count: int
    commands: list  # CommandEntry | StreamEntry
    events: list[EventEntry]
    start_time: int
    end_time: int
    command_tasks: list = field(default_factory=list)

    @property
    def has_orphans(self) -> bool:
        return any(task is None for task in self.command_tasks)

    @property
    def span_seconds(self) -> float:
        return (self.end_time - self.start_time) / 1000.0


def parse_timestamp_ms(text: str) -> int:
    """ISO-8601 timestamp -> ms since epoch. Naive times are taken as UTC."""
    if not isinstance(text, str):
        raise ValueError(f"timestamp must be an ISO-8601 string, got {text!r}")
    try:
        dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        raise ValueError(f"bad timestamp {text!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(round((dt - _EPOCH) / timedelta(milliseconds=1)))


def format_timestamp_ms(ms: int) -> str:
    """ms since epoch -> canonical ISO-8601 string with millisecond precision."""
    dt = _EPOCH + timedelta(milliseconds=int(ms))
    return dt.isoformat(timespec="milliseconds")


def _text(data) -> str:
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def _require(record: dict, key: str, kind=str):
    if key not in record:
        raise ValueError(f"missing field {key!r}")
    value = record[key]
    if kind is str and not isinstance(value, str):
        raise ValueError(f"field {key!r} must be a string")
    return value


def _parse_command_record(record: dict) -> CommandEntry:
    if not isinstance(record, dict):
        raise ValueError("record must be a JSON object")
    student = _require(record, "student_id")
    ts = parse_timestamp_ms(_require(record, "timestamp"))
    if ts <= 0:
        raise ValueError("timestamp must be positive")
    interpreter = _require(record, "interpreter")
    if interpreter not in INTERPRETERS:
        raise ValueError(f"unknown interpreter {interpreter!r}")
    cmd = _require(record, "cmd")
    if not cmd.strip():
        raise ValueError("cmd must be non-empty")
    wd = record.get("wd")
    if wd is not None and not isinstance(wd, str):
        raise ValueError("wd must be a string when present")
    return CommandEntry(student, ts, interpreter, cmd, wd)


def _parse_event_record(record: dict) -> EventEntry:
    if not isinstance(record, dict):
        raise ValueError("record must be a JSON object")
    student = _require(record, "student_id")
    ts = parse_timestamp_ms(_require(record, "timestamp"))
    if ts <= 0:
        raise ValueError("timestamp must be positive")
    exercise = _require(record, "exercise_id")
    name = _require(record, "event")
    kind = _EVENT_NAMES.get(name)
    if kind is None:
        raise ValueError(f"unknown event kind {name!r}")
    task = record.get("task", record.get("level"))
    if not isinstance(task, int) or isinstance(task, bool) or task < 1:
        raise ValueError("task must be a positive integer")
    answer = record.get("answer")
    if kind in ANSWER_KINDS:
        if not isinstance(answer, str):
            raise ValueError(f"{kind} requires an answer string")
    elif answer is not None:
        raise ValueError(f"{kind} must not carry an answer")
    return EventEntry(student, ts, exercise, task, kind, answer)


def _parse_stream_record(record: dict) -> StreamEntry:
    if not isinstance(record, dict):
        raise ValueError("record must be a JSON object")
    student = _require(record, "student_id")
    course = _require(record, "course_id")
    task = _require(record, "task_id")
    ts = parse_timestamp_ms(_require(record, "timestamp"))
    if ts <= 0:
        raise ValueError("timestamp must be positive")
    input_text = _require(record, "input")
    if not input_text.strip():
        raise ValueError("input must be non-empty")
    output_text = _require(record, "output")
    return StreamEntry(student, course, task, ts, input_text, output_text)


def _parse_log(data, strict: bool, line_parser: Callable) -> ParseResult:
    entries = []
    skipped: list[tuple[int, str]] = []
    for line_no, line in enumerate(_text(data).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            entries.append(line_parser(json.loads(line)))
        except (ValueError, TypeError) as exc:
            reason = str(exc) or exc.__class__.__name__
            if strict:
                raise LogParseError(line_no, reason) from exc
            skipped.append((line_no, reason))
    return ParseResult(entries, skipped)


def parse_kypo_command_log(data, strict: bool = True) -> ParseResult:
    """Parse a kypo_style command log.

    One JSON object per line:
    ``{"student_id", "timestamp" (ISO-8601), "interpreter": "shell"|"msf",
    "cmd", "wd"?}``. In strict mode a malformed line raises LogParseError;
    in lenient mode it is skipped and reported in ``ParseResult.skipped``.
    """
    return _parse_log(data, strict, _parse_command_record)


def parse_kypo_event_log(data, strict: bool = True) -> ParseResult:
    """Parse a kypo_style event log.

    One JSON object per line: ``{"student_id", "timestamp", "exercise_id",
    "task": int, "event": UPPER_SNAKE kind, "answer"?}``. ``level`` is accepted
    as an alias for ``task``; answer-bearing kinds require ``answer``.
    """
    return _parse_log(data, strict, _parse_event_record)


def parse_edurange_log(data, strict: bool = True) -> ParseResult:
    """Parse an edurange_style terminal stream log.

    One JSON object per line: ``{"student_id", "course_id", "task_id",
    "timestamp", "input", "output"}``.
    """
    return _parse_log(data, strict, _parse_stream_record)


def command_record(e: CommandEntry) -> dict:
    rec = {
        "student_id": e.student_id,
        "timestamp": format_timestamp_ms(e.timestamp),
        "interpreter": e.interpreter,
        "cmd": e.command_text,
    }
    if e.working_dir is not None:
        rec["wd"] = e.working_dir
    return rec


def event_record(e: EventEntry) -> dict:
    rec = {
        "student_id": e.student_id,
        "timestamp": format_timestamp_ms(e.timestamp),
        "exercise_id": e.exercise_id,
        "task": e.task_index,
        "event": e.kind.upper(),
    }
    if e.answer_text is not None:
        rec["answer"] = e.answer_text
    return rec


def stream_record(e: StreamEntry) -> dict:
    return {
        "student_id": e.student_id,
        "course_id": e.course_id,
        "task_id": e.task_id,
        "timestamp": format_timestamp_ms(e.timestamp),
        "input": e.input_text,
        "output": e.output_text,
    }


def _record_for(entry) -> dict:
    if isinstance(entry, CommandEntry):
        return command_record(entry)
    if isinstance(entry, EventEntry):
        return event_record(entry)
    if isinstance(entry, StreamEntry):
        return stream_record(entry)
    raise TypeError(f"not a log entry: {entry!r}")


def to_jsonl(entries: Iterable) -> str:
    """Serialize entries back to canonical newline-delimited JSON."""
    lines = [json.dumps(_record_for(e), sort_keys=True) for e in entries]
    return "\n".join(lines) + ("\n" if lines else "")


def _dedup_key(entry):
    if isinstance(entry, CommandEntry):
        return (entry.student_id, entry.timestamp, entry.command_text)
    if isinstance(entry, EventEntry):
        return (entry.student_id, entry.timestamp, entry.kind)
    if isinstance(entry, StreamEntry):
        return (entry.student_id, entry.timestamp, entry.input_text)
    raise TypeError(f"not a log entry: {entry!r}")


def clean_records(entries: list) -> tuple[list, int]:
    """Sort by (student_id, timestamp) and drop exact duplicates.

    A duplicate repeats (student_id, timestamp, command_text/kind/input) of an
    earlier entry; the first occurrence wins. Returns the cleaned list and the
    number of removals. Idempotent.
    """
    ordered = sorted(entries, key=lambda e: (e.student_id, e.timestamp))
    seen = set()
    cleaned = []
    for entry in ordered:
        key = _dedup_key(entry)
        if key in seen:
            continue
        seen.add(key)
        cleaned.append(entry)
    return cleaned, len(entries) - len(cleaned)


def _map_sandbox(commands: list[CommandEntry], meta: ExerciseMeta) -> list[CommandEntry]:
    if not meta.sandbox_to_student:
        return list(commands)
    mapped = []
    for cmd in commands:
        student = meta.sandbox_to_student.get(cmd.student_id)
        if student is None:
            raise SessionizeError(f"unknown sandbox id {cmd.student_id!r}")
        mapped.append(replace(cmd, student_id=student))
    return mapped


def _task_windows(events: list[EventEntry]) -> tuple[list[int], list]:
    """Build [start_ts] and parallel [task_index] half-open attribution windows.

    Each level_started opens a window for its task and closes the previous
    one; training_completed closes the current window. Windows are keyed by
    their start timestamp; a command at time t belongs to the latest window
    with start <= t that has not been closed before t.
    """
    starts: list[int] = []
    tasks: list = []
    for ev in events:
        if ev.kind == "level_started":
            starts.append(ev.timestamp)
            tasks.append(ev.task_index)
        elif ev.kind == "training_completed":
            starts.append(ev.timestamp)
            tasks.append(None)
    return starts, tasks


def _attribute(commands: list[CommandEntry], events: list[EventEntry]) -> list:
    starts, tasks = _task_windows(events)
    attribution = []
    for cmd in commands:
        idx = bisect_right(starts, cmd.timestamp) - 1
        attribution.append(tasks[idx] if idx >= 0 else None)
    return attribution


def _sessionize_kypo(commands, events, meta: ExerciseMeta) -> list[SessionRecord]:
    commands = _map_sandbox(commands, meta)
    by_student_cmds: dict[str, list[CommandEntry]] = {}
    for cmd in commands:
        by_student_cmds.setdefault(cmd.student_id, []).append(cmd)
    by_student_events: dict[str, list[EventEntry]] = {}
    for ev in events:
        if ev.exercise_id != meta.exercise_id:
            raise SessionizeError(
                f"event for exercise {ev.exercise_id!r}, expected {meta.exercise_id!r}"
            )
        if ev.task_index > meta.task_count:
            raise SessionizeError(
                f"task index {ev.task_index} exceeds task count {meta.task_count}"
            )
        by_student_events.setdefault(ev.student_id, []).append(ev)

    sessions = []
    for student in sorted(set(by_student_cmds) | set(by_student_events)):
        cmds = sorted(by_student_cmds.get(student, []), key=lambda e: e.timestamp)
        evs = sorted(by_student_events.get(student, []), key=lambda e: e.timestamp)
        stamps = [e.timestamp for e in cmds] + [e.timestamp for e in evs]
        sessions.append(
            SessionRecord(
                platform=KYPO,
                student_id=student,
                exercise_id=meta.exercise_id,
                task_count=meta.task_count,
                commands=cmds,
                events=evs,
                start_time=min(stamps),
                end_time=max(stamps),
                command_tasks=_attribute(cmds, evs),
            )
        )
    return sessions


def _sessionize_edurange(streams, meta: ExerciseMeta) -> list[SessionRecord]:
    declared = set(meta.solutions) if meta.solutions else None
    by_student: dict[str, list[StreamEntry]] = {}
    for entry in streams:
        if declared is not None and entry.task_id not in declared:
            raise SessionizeError(f"undeclared task id {entry.task_id!r}")
        by_student.setdefault(entry.student_id, []).append(entry)

    sessions = []
    for student in sorted(by_student):
        entries = sorted(by_student[student], key=lambda e: e.timestamp)
        stamps = [e.timestamp for e in entries]
        sessions.append(
            SessionRecord(
                platform=EDURANGE,
                student_id=student,
                exercise_id=meta.exercise_id,
                task_count=meta.task_count,
                commands=entries,
                events=[],
                start_time=min(stamps),
                end_time=max(stamps),
                command_tasks=[e.task_id for e in entries],
            )
        )
    return sessions


def sessionize(commands: list, events: list, meta: ExerciseMeta) -> list[SessionRecord]:
    """Group cleaned entries into one SessionRecord per student.

    kypo_style: ``commands`` are CommandEntry (sandbox ids resolved through
    meta), ``events`` are EventEntry; commands are attributed to the task
    whose level_started window encloses them, None (orphan) outside any
    window. edurange_style: ``commands`` are StreamEntry and ``events`` must
    be empty; attribution comes from each entry's task_id.

    Entries are never invented or dropped: the union of session contents
    equals the input (orphan commands are kept, flagged via command_tasks).
    """
    if meta.platform == KYPO:
        return _sessionize_kypo(commands, events, meta)
    if events:
        raise SessionizeError("edurange_style sessions carry no event log")
    return _sessionize_edurange(commands, meta)


def truncate_session(s: SessionRecord, fraction: float) -> SessionRecord:
    """Keep the first ceil(fraction * n) commands and events.

    ``fraction`` must lie in (0, 1]. end_time is recomputed from the kept
    entries; start_time, task_count and attribution of kept commands are
    unchanged. fraction=1.0 returns an identical session.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    keep_cmds = math.ceil(fraction * len(s.commands))
    keep_events = math.ceil(fraction * len(s.events))
    commands = s.commands[:keep_cmds]
    events = s.events[:keep_events]
    stamps = [e.timestamp for e in commands] + [e.timestamp for e in events]
    return SessionRecord(
        platform=s.platform,
        student_id=s.student_id,
        exercise_id=s.exercise_id,
        task_count=s.task_count,
        commands=commands,
        events=events,
        start_time=s.start_time,
        end_time=max(stamps) if stamps else s.start_time,
        command_tasks=s.command_tasks[:keep_cmds],
    )


def load_exercise_meta(doc: dict) -> ExerciseMeta:
    """Build ExerciseMeta from its JSON document form."""
    if not isinstance(doc, dict):
        raise ValueError("exercise meta must be a JSON object")
    platform = _require(doc, "platform")
    meta = ExerciseMeta(
        exercise_id=_require(doc, "exercise_id"),
        task_count=doc.get("task_count", 0),
        platform=platform,
        sandbox_to_student=dict(doc.get("sandbox_to_student", {})),
        solutions=load_solution_specs(doc.get("solutions", {})),
        error_patterns=doc.get("error_patterns"),
    )
    return meta


def exercise_meta_doc(meta: ExerciseMeta) -> dict:
    doc = {
        "exercise_id": meta.exercise_id,
        "task_count": meta.task_count,
        "platform": meta.platform,
    }
    if meta.sandbox_to_student:
        doc["sandbox_to_student"] = dict(meta.sandbox_to_student)
    if meta.solutions:
        doc["solutions"] = {
            task: [spec.to_dict() for spec in specs]
            for task, specs in meta.solutions.items()
        }
    if meta.error_patterns is not None:
        doc["error_patterns"] = list(meta.error_patterns)
    return doc
