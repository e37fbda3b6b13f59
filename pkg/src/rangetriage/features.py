"""Behavioral feature extraction from exercise sessions.

Each session becomes a fixed-length vector (25 features for kypo_style, 15
for edurange_style). Sub-features that cannot be computed from the observed
activity are marked undefined at extraction time and filled by ``impute``:
duration-like features take the student's own session span in seconds,
count/ratio/rate features take 0. The imputation mask travels with the
vector so downstream consumers can tell filled values from observed ones.

Per-task aggregates run over the tasks a student actually touched: for
kypo_style the tasks entered (a level_started event or an attributed
command), for edurange_style the tasks observed in the stream. Solution and
wrong-answer averages divide by the exercise's full task count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .commands import (
    SolutionSpec,
    TaskCompletion,
    detect_error,
    detect_task_completions,
    parse_command,
)
from .ingest import EDURANGE, KYPO, SessionRecord

_NAN = float("nan")


@dataclass(frozen=True)
class FeatureDef:
    id: int
    name: str
    group: str
    platform: str
    imputation: str  # "zero" | "span"


def _defs(platform: str, rows: list[tuple[str, str, str]]) -> tuple[FeatureDef, ...]:
    return tuple(
        FeatureDef(i + 1, name, group, platform, imputation)
        for i, (name, group, imputation) in enumerate(rows)
    )


KYPO_FEATURES = _defs(
    KYPO,
    [
        ("avg_commands_per_task", "command_usage", "zero"),
        ("min_commands_per_task", "command_usage", "zero"),
        ("max_commands_per_task", "command_usage", "zero"),
        ("commands_per_minute", "command_usage", "zero"),
        ("longest_command_repeat", "command_usage", "zero"),
        ("mean_command_gap_seconds", "command_usage", "span"),
        ("avg_unique_tools_per_task", "tool_usage", "zero"),
        ("min_unique_tools_per_task", "tool_usage", "zero"),
        ("max_unique_tools_per_task", "tool_usage", "zero"),
        ("unique_tools_per_minute", "tool_usage", "zero"),
        ("longest_tool_repeat", "tool_usage", "zero"),
        ("mean_tool_change_gap_seconds", "tool_usage", "span"),
        ("solution_display_ratio", "solutions", "zero"),
        ("solution_in_first_half", "solutions", "zero"),
        ("solutions_on_consecutive_tasks", "solutions", "zero"),
        ("min_seconds_to_solution_display", "solutions", "span"),
        ("avg_wrong_answers_per_task", "answers", "zero"),
        ("max_consecutive_wrong_answers", "answers", "zero"),
        ("mean_answer_gap_seconds", "answers", "span"),
        ("avg_seconds_to_first_answer", "answers", "span"),
        ("min_seconds_to_first_answer", "answers", "span"),
        ("max_seconds_to_first_answer", "answers", "span"),
        ("avg_seconds_to_correct_answer", "duration", "span"),
        ("min_seconds_to_correct_answer", "duration", "span"),
        ("max_seconds_to_correct_answer", "duration", "span"),
    ],
)

EDURANGE_FEATURES = _defs(
    EDURANGE,
    [
        ("avg_commands_per_task", "command_usage", "zero"),
        ("min_commands_per_task", "command_usage", "zero"),
        ("max_commands_per_task", "command_usage", "zero"),
        ("commands_per_minute", "command_usage", "zero"),
        ("longest_command_repeat", "command_usage", "zero"),
        ("mean_command_gap_seconds", "command_usage", "span"),
        ("avg_unique_commands_per_task", "command_usage", "zero"),
        ("min_unique_commands_per_task", "command_usage", "zero"),
        ("max_unique_commands_per_task", "command_usage", "zero"),
        ("avg_errors_per_task", "errors", "zero"),
        ("max_errors_per_task", "errors", "zero"),
        ("avg_seconds_to_completion", "duration", "span"),
        ("min_seconds_to_completion", "duration", "span"),
        ("max_seconds_to_completion", "duration", "span"),
        ("mean_completion_gap_seconds", "duration", "span"),
    ],
)


def feature_catalog(platform: str) -> tuple[FeatureDef, ...]:
    if platform == KYPO:
        return KYPO_FEATURES
    if platform == EDURANGE:
        return EDURANGE_FEATURES
    raise ValueError(f"unknown platform {platform!r}")


@dataclass
class FeatureVector:
    student_id: str
    platform: str
    values: list[float]
    imputed: list[bool]


def longest_run(values: Sequence) -> int:
    """Length of the longest run of equal consecutive values; 0 when empty."""
    best = current = 0
    previous = object()
    for value in values:
        current = current + 1 if value == previous else 1
        best = max(best, current)
        previous = value
    return best


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values) if values else _NAN


def _gaps_seconds(stamps: Sequence[int]) -> list[float]:
    return [(b - a) / 1000.0 for a, b in zip(stamps, stamps[1:])]


def _safe_parse(text: str):
    try:
        return parse_command(text)
    except ValueError:
        return None


_NO_TOOL = object()  # sentinel tool for unparseable command lines


def _first_times(events, kind: str) -> dict[int, int]:
    first: dict[int, int] = {}
    for e in events:
        if e.kind == kind and e.task_index not in first:
            first[e.task_index] = e.timestamp
    return first


def extract_kypo_features(session: SessionRecord) -> FeatureVector:
    """Extract the 25 kypo_style features; undefined entries are NaN."""
    if session.platform != KYPO:
        raise ValueError(f"expected a {KYPO} session, got {session.platform}")
    v = [_NAN] * 25
    cmds = session.commands
    events = sorted(session.events, key=lambda e: e.timestamp)
    if not cmds and not events:
        return FeatureVector(session.student_id, KYPO, v, [True] * 25)

    span_minutes = (session.end_time - session.start_time) / 60000.0
    parsed = [_safe_parse(c.command_text) for c in cmds]
    segment_tools = [
        [seg.tool for seg in p.segments] if p is not None else [] for p in parsed
    ]
    primary_tools = [tools[0] if tools else _NO_TOOL for tools in segment_tools]

    level_starts = _first_times(events, "level_started")
    entered = sorted(
        set(level_starts) | {t for t in session.command_tasks if t is not None}
    )
    counts = {task: 0 for task in entered}
    tools_by_task: dict[int, set] = {task: set() for task in entered}
    for task, tools in zip(session.command_tasks, segment_tools):
        if task is not None:
            counts[task] += 1
            tools_by_task[task].update(tools)

    if entered:
        per_task = [counts[t] for t in entered]
        v[0] = _mean(per_task)
        v[1] = float(min(per_task))
        v[2] = float(max(per_task))
        uniques = [float(len(tools_by_task[t])) for t in entered]
        v[6] = _mean(uniques)
        v[7] = min(uniques)
        v[8] = max(uniques)

    if span_minutes > 0:
        v[3] = len(cmds) / span_minutes
        all_tools = set().union(*segment_tools) if segment_tools else set()
        v[9] = len(all_tools) / span_minutes

    if cmds:
        v[4] = float(longest_run([c.command_text for c in cmds]))
        v[10] = float(longest_run(primary_tools))
    stamps = [c.timestamp for c in cmds]
    gaps = _gaps_seconds(stamps)
    if gaps:
        v[5] = _mean(gaps)
    change_gaps = [
        gap
        for gap, prev, cur in zip(gaps, primary_tools, primary_tools[1:])
        if prev != cur
    ]
    if change_gaps:
        v[11] = _mean(change_gaps)

    revealed = sorted(
        {e.task_index for e in events if e.kind == "solution_displayed"}
    )
    v[12] = len(revealed) / session.task_count
    first_half = math.floor(session.task_count / 2)
    v[13] = 1.0 if any(t <= first_half for t in revealed) else 0.0
    consecutive = any(b - a == 1 for a, b in zip(revealed, revealed[1:]))
    v[14] = 1.0 if consecutive else 0.0
    first_solutions = _first_times(events, "solution_displayed")
    solution_deltas = [
        (first_solutions[t] - level_starts[t]) / 1000.0
        for t in first_solutions
        if t in level_starts
    ]
    if solution_deltas:
        v[15] = min(solution_deltas)

    wrongs = [e for e in events if e.kind == "wrong_answer"]
    v[16] = len(wrongs) / session.task_count
    # Runs of wrong answers broken only by command entries; at equal
    # timestamps the command sorts first (breaking the run).
    timeline = sorted(
        [(c.timestamp, 0) for c in cmds] + [(e.timestamp, 1) for e in wrongs]
    )
    run = best_run = 0
    for _, marker in timeline:
        run = run + 1 if marker == 1 else 0
        best_run = max(best_run, run)
    v[17] = float(best_run)

    answers = [e for e in events if e.kind in ("wrong_answer", "correct_answer")]
    answer_gaps = _gaps_seconds([e.timestamp for e in answers])
    if answer_gaps:
        v[18] = _mean(answer_gaps)
    first_answers: dict[int, int] = {}
    for e in answers:
        if e.task_index not in first_answers:
            first_answers[e.task_index] = e.timestamp
    answer_deltas = [
        (first_answers[t] - level_starts[t]) / 1000.0
        for t in first_answers
        if t in level_starts
    ]
    if answer_deltas:
        v[19] = _mean(answer_deltas)
        v[20] = min(answer_deltas)
        v[21] = max(answer_deltas)
    first_corrects = _first_times(events, "correct_answer")
    correct_deltas = [
        (first_corrects[t] - level_starts[t]) / 1000.0
        for t in first_corrects
        if t in level_starts
    ]
    if correct_deltas:
        v[22] = _mean(correct_deltas)
        v[23] = min(correct_deltas)
        v[24] = max(correct_deltas)

    return FeatureVector(
        session.student_id, KYPO, v, [math.isnan(x) for x in v]
    )


def extract_edurange_features(
    session: SessionRecord,
    completions: Sequence[TaskCompletion],
    error_patterns: Iterable[str] | None = None,
) -> FeatureVector:
    """Extract the 15 edurange_style features; undefined entries are NaN."""
    if session.platform != EDURANGE:
        raise ValueError(f"expected an {EDURANGE} session, got {session.platform}")
    v = [_NAN] * 15
    entries = session.commands
    if not entries:
        return FeatureVector(session.student_id, EDURANGE, v, [True] * 15)

    span_minutes = (session.end_time - session.start_time) / 60000.0
    observed: list[str] = []
    counts: dict[str, int] = {}
    inputs_by_task: dict[str, set] = {}
    first_entry: dict[str, int] = {}
    errors: dict[str, int] = {}
    patterns = list(error_patterns) if error_patterns is not None else None
    for entry in entries:
        task = entry.task_id
        if task not in counts:
            observed.append(task)
            counts[task] = 0
            inputs_by_task[task] = set()
            errors[task] = 0
            first_entry[task] = entry.timestamp
        counts[task] += 1
        inputs_by_task[task].add(entry.input_text)
        if detect_error(entry.output_text, patterns):
            errors[task] += 1

    per_task = [counts[t] for t in observed]
    v[0] = _mean(per_task)
    v[1] = float(min(per_task))
    v[2] = float(max(per_task))
    if span_minutes > 0:
        v[3] = len(entries) / span_minutes
    v[4] = float(longest_run([e.input_text for e in entries]))
    gaps = _gaps_seconds([e.timestamp for e in entries])
    if gaps:
        v[5] = _mean(gaps)
    uniques = [float(len(inputs_by_task[t])) for t in observed]
    v[6] = _mean(uniques)
    v[7] = min(uniques)
    v[8] = max(uniques)
    per_task_errors = [float(errors[t]) for t in observed]
    v[9] = _mean(per_task_errors)
    v[10] = max(per_task_errors)

    deltas = [
        (c.timestamp - first_entry[c.task_id]) / 1000.0
        for c in completions
        if c.task_id in first_entry
    ]
    if deltas:
        v[11] = _mean(deltas)
        v[12] = min(deltas)
        v[13] = max(deltas)
    completion_gaps = _gaps_seconds(sorted(c.timestamp for c in completions))
    if completion_gaps:
        v[14] = _mean(completion_gaps)

    return FeatureVector(
        session.student_id, EDURANGE, v, [math.isnan(x) for x in v]
    )


def impute(vector: FeatureVector, session: SessionRecord) -> FeatureVector:
    """Fill undefined entries: span seconds for durations, 0 for counts."""
    catalog = feature_catalog(vector.platform)
    span = session.span_seconds
    values = list(vector.values)
    imputed = list(vector.imputed)
    for i, definition in enumerate(catalog):
        if math.isnan(values[i]):
            values[i] = span if definition.imputation == "span" else 0.0
            imputed[i] = True
    return FeatureVector(vector.student_id, vector.platform, values, imputed)


def session_features(
    session: SessionRecord,
    solutions: dict[str, list[SolutionSpec]] | None = None,
    error_patterns: Iterable[str] | None = None,
) -> FeatureVector:
    """Extract and impute features for one session of either platform."""
    if session.platform == KYPO:
        return impute(extract_kypo_features(session), session)
    completions = detect_task_completions(session, solutions or {}, error_patterns)
    return impute(
        extract_edurange_features(session, completions, error_patterns), session
    )


def feature_matrix(vectors: Sequence[FeatureVector]) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Stack vectors into (X, imputed mask, student ids), row per student."""
    if not vectors:
        raise ValueError("no feature vectors")
    X = np.array([fv.values for fv in vectors], dtype=float)
    mask = np.array([fv.imputed for fv in vectors], dtype=bool)
    ids = [fv.student_id for fv in vectors]
    return X, mask, ids


@dataclass
class Scaler:
    """Per-feature min-max unitization learned from training rows only."""

    mins: np.ndarray
    maxs: np.ndarray

    def to_dict(self) -> dict:
        return {"mins": self.mins.tolist(), "maxs": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "Scaler":
        return cls(np.asarray(doc["mins"], float), np.asarray(doc["maxs"], float))


def fit_scaler(matrix: np.ndarray) -> Scaler:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] < 1:
        raise ValueError("training matrix must be 2-D and non-empty")
    if np.isnan(matrix).any() or np.isinf(matrix).any():
        raise ValueError("training matrix must be finite (impute first)")
    return Scaler(mins=matrix.min(axis=0), maxs=matrix.max(axis=0))


def apply_scaler(scaler: Scaler, matrix: np.ndarray) -> np.ndarray:
    """Map each column through (x - min) / (max - min), without clipping.

    A zero-range column maps to the constant 0.5 for any input. Training
    columns land in [0, 1]; unseen values may fall outside.
    """
    matrix = np.asarray(matrix, dtype=float)
    span = scaler.maxs - scaler.mins
    degenerate = span == 0
    safe = np.where(degenerate, 1.0, span)
    out = (matrix - scaler.mins) / safe
    out[..., degenerate] = 0.5
    return out
