"""Log parsing, cleaning, sessionization, truncation."""

from __future__ import annotations

import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rangetriage import ingest
from rangetriage.ingest import (
    CommandEntry,
    EventEntry,
    ExerciseMeta,
    LogParseError,
    SessionizeError,
    StreamEntry,
)


def cmd_line(student="s1", ts="2024-03-01T10:00:00Z", cmd="ls -la", **extra):
    record = {"student_id": student, "timestamp": ts, "interpreter": "shell", "cmd": cmd}
    record.update(extra)
    return json.dumps(record)


class TestTimestamps:
    def test_parse_iso_utc(self):
        assert ingest.parse_timestamp_ms("1970-01-01T00:00:01+00:00") == 1000

    def test_zulu_suffix_and_millis(self):
        assert ingest.parse_timestamp_ms("1970-01-01T00:00:01.250Z") == 1250

    def test_naive_treated_as_utc(self):
        assert ingest.parse_timestamp_ms("1970-01-01T00:00:02") == 2000

    def test_round_trip(self):
        ms = 1709287200123
        assert ingest.parse_timestamp_ms(ingest.format_timestamp_ms(ms)) == ms

    @given(st.integers(min_value=1, max_value=4_102_444_800_000))
    def test_round_trip_property(self, ms):
        assert ingest.parse_timestamp_ms(ingest.format_timestamp_ms(ms)) == ms

    def test_garbage_rejected(self):
        with pytest.raises(ValueError):
            ingest.parse_timestamp_ms("yesterday at noon")


class TestCommandLogParsing:
    def test_well_formed_line(self):
        result = ingest.parse_kypo_command_log(cmd_line(wd="/root"))
        assert result.skipped == []
        (entry,) = result.entries
        assert entry.student_id == "s1"
        assert entry.interpreter == "shell"
        assert entry.command_text == "ls -la"
        assert entry.working_dir == "/root"

    def test_working_dir_optional(self):
        (entry,) = ingest.parse_kypo_command_log(cmd_line()).entries
        assert entry.working_dir is None

    def test_strict_mode_raises_with_line_number(self):
        data = cmd_line() + "\n{broken"
        with pytest.raises(LogParseError) as err:
            ingest.parse_kypo_command_log(data)
        assert err.value.line_no == 2

    def test_lenient_mode_skips_and_counts(self):
        data = cmd_line() + "\n{broken\n" + cmd_line(student="s2")
        result = ingest.parse_kypo_command_log(data, strict=False)
        assert len(result.entries) == 2
        assert len(result.skipped) == 1
        assert result.skipped[0][0] == 2

    def test_truncated_final_line_lenient(self):
        data = "\n".join(cmd_line(student=f"s{i}") for i in range(3))
        truncated = data[: data.rfind('"')]
        result = ingest.parse_kypo_command_log(truncated, strict=False)
        assert len(result.entries) == 2
        assert len(result.skipped) == 1

    def test_empty_command_rejected(self):
        with pytest.raises(LogParseError):
            ingest.parse_kypo_command_log(cmd_line(cmd="   "))

    def test_unknown_interpreter_rejected(self):
        record = json.loads(cmd_line())
        record["interpreter"] = "powershell"
        with pytest.raises(LogParseError):
            ingest.parse_kypo_command_log(json.dumps(record))

    def test_accepts_bytes(self):
        result = ingest.parse_kypo_command_log(cmd_line().encode())
        assert len(result.entries) == 1


class TestEventLogParsing:
    def event(self, **over):
        record = {
            "student_id": "s1",
            "timestamp": "2024-03-01T10:00:00Z",
            "exercise_id": "ex1",
            "task": 3,
            "event": "SOLUTION_DISPLAYED",
        }
        record.update(over)
        return json.dumps(record)

    def test_kind_and_task(self):
        (entry,) = ingest.parse_kypo_event_log(self.event()).entries
        assert entry.kind == "solution_displayed"
        assert entry.task_index == 3

    def test_level_key_alias(self):
        record = json.loads(self.event())
        del record["task"]
        record["level"] = 2
        (entry,) = ingest.parse_kypo_event_log(json.dumps(record)).entries
        assert entry.task_index == 2

    def test_submitted_alias(self):
        line = self.event(event="WRONG_ANSWER_SUBMITTED", answer="flag{x}")
        (entry,) = ingest.parse_kypo_event_log(line).entries
        assert entry.kind == "wrong_answer"
        assert entry.answer_text == "flag{x}"

    def test_unknown_event_kind(self):
        with pytest.raises(LogParseError):
            ingest.parse_kypo_event_log(self.event(event="HINT_TAKEN"))

    def test_answer_required_for_answer_kinds(self):
        with pytest.raises(LogParseError):
            ingest.parse_kypo_event_log(self.event(event="CORRECT_ANSWER"))

    def test_answer_forbidden_elsewhere(self):
        with pytest.raises(LogParseError):
            ingest.parse_kypo_event_log(self.event(answer="flag{x}"))

    def test_all_seven_kinds_round_trip(self):
        for kind in ingest.EVENT_KINDS:
            answer = "a" if kind in ingest.ANSWER_KINDS else None
            entry = EventEntry("s1", 1000, "ex1", 1, kind, answer)
            line = ingest.to_jsonl([entry])
            (back,) = ingest.parse_kypo_event_log(line).entries
            assert back == entry


class TestStreamLogParsing:
    def test_well_formed(self):
        line = json.dumps(
            {
                "student_id": "e1",
                "course_id": "c1",
                "task_id": "t1",
                "timestamp": "2024-03-01T10:00:00Z",
                "input": "ls",
                "output": "",
            }
        )
        (entry,) = ingest.parse_edurange_log(line).entries
        assert entry.task_id == "t1"
        assert entry.output_text == ""

    def test_empty_input_rejected(self):
        line = json.dumps(
            {
                "student_id": "e1",
                "course_id": "c1",
                "task_id": "t1",
                "timestamp": "2024-03-01T10:00:00Z",
                "input": " ",
                "output": "",
            }
        )
        with pytest.raises(LogParseError):
            ingest.parse_edurange_log(line)


def make_commands(*specs):
    return [
        CommandEntry(student, ts, "shell", text)
        for student, ts, text in specs
    ]


class TestCleanRecords:
    def test_dedup_and_sort(self):
        entries = make_commands(
            ("s2", 2000, "ls"),
            ("s1", 3000, "pwd"),
            ("s1", 1000, "ls"),
            ("s1", 1000, "ls"),
        )
        cleaned, removed = ingest.clean_records(entries)
        assert removed == 1
        assert [(e.student_id, e.timestamp) for e in cleaned] == [
            ("s1", 1000),
            ("s1", 3000),
            ("s2", 2000),
        ]

    def test_same_timestamp_different_text_kept(self):
        entries = make_commands(("s1", 1000, "ls"), ("s1", 1000, "pwd"))
        cleaned, removed = ingest.clean_records(entries)
        assert removed == 0
        assert len(cleaned) == 2

    def test_event_dedup_by_kind(self):
        events = [
            EventEntry("s1", 1000, "ex1", 1, "level_started"),
            EventEntry("s1", 1000, "ex1", 1, "level_started"),
        ]
        cleaned, removed = ingest.clean_records(events)
        assert removed == 1

    @given(
        st.lists(
            st.tuples(
                st.sampled_from(["s1", "s2", "s3"]),
                st.integers(min_value=1, max_value=50),
                st.sampled_from(["ls", "pwd", "id"]),
            ),
            max_size=30,
        )
    )
    def test_idempotent(self, specs):
        entries = make_commands(*specs)
        once, _ = ingest.clean_records(entries)
        twice, removed = ingest.clean_records(once)
        assert removed == 0
        assert twice == once


class TestSessionize:
    def test_window_attribution(self, kypo_session):
        assert kypo_session.command_tasks == [1, 1, 1, 2, 2]
        assert kypo_session.start_time < kypo_session.end_time
        assert not kypo_session.has_orphans

    def test_bounds_invariant(self, kypo_session):
        for entry in kypo_session.commands + kypo_session.events:
            assert kypo_session.start_time <= entry.timestamp <= kypo_session.end_time

    def test_command_before_first_level_is_orphan(self):
        meta = ExerciseMeta("ex1", 2, ingest.KYPO)
        commands = make_commands(("s1", 500, "ls"))
        events = [EventEntry("s1", 1000, "ex1", 1, "level_started")]
        (session,) = ingest.sessionize(commands, events, meta)
        assert session.command_tasks == [None]
        assert session.has_orphans

    def test_command_after_training_completed_is_orphan(self):
        meta = ExerciseMeta("ex1", 1, ingest.KYPO)
        events = [
            EventEntry("s1", 1000, "ex1", 1, "level_started"),
            EventEntry("s1", 2000, "ex1", 1, "training_completed"),
        ]
        commands = make_commands(("s1", 3000, "ls"))
        (session,) = ingest.sessionize(commands, events, meta)
        assert session.command_tasks == [None]

    def test_student_without_events_flagged(self):
        meta = ExerciseMeta("ex1", 2, ingest.KYPO)
        commands = make_commands(("s1", 1000, "ls"), ("s1", 2000, "pwd"))
        (session,) = ingest.sessionize(commands, [], meta)
        assert session.command_tasks == [None, None]
        assert session.has_orphans

    def test_sandbox_mapping(self):
        meta = ExerciseMeta(
            "ex1", 1, ingest.KYPO, sandbox_to_student={"sb-9": "s1"}
        )
        commands = make_commands(("sb-9", 1500, "ls"))
        events = [EventEntry("s1", 1000, "ex1", 1, "level_started")]
        (session,) = ingest.sessionize(commands, events, meta)
        assert session.student_id == "s1"
        assert session.command_tasks == [1]

    def test_unknown_sandbox_id(self):
        meta = ExerciseMeta(
            "ex1", 1, ingest.KYPO, sandbox_to_student={"sb-9": "s1"}
        )
        commands = make_commands(("sb-7", 1500, "ls"))
        with pytest.raises(SessionizeError):
            ingest.sessionize(commands, [], meta)

    def test_task_index_beyond_count(self):
        meta = ExerciseMeta("ex1", 1, ingest.KYPO)
        events = [EventEntry("s1", 1000, "ex1", 5, "level_started")]
        with pytest.raises(SessionizeError):
            ingest.sessionize([], events, meta)

    def test_entry_multiset_preserved(self, kypo_session):
        sessions, meta = __import__("conftest").load_kypo_fixture()
        total_cmds = sum(len(s.commands) for s in sessions)
        total_events = sum(len(s.events) for s in sessions)
        assert total_cmds == 5
        assert total_events == 7

    def test_edurange_grouping(self, edurange_session):
        assert edurange_session.command_tasks == [
            "t1", "t1", "t1", "t1", "t2", "t2", "t2", "t2", "t2", "t2"
        ]
        assert edurange_session.events == []

    def test_edurange_rejects_events(self):
        meta = ExerciseMeta("ex1", 1, ingest.EDURANGE)
        events = [EventEntry("s1", 1000, "ex1", 1, "level_started")]
        with pytest.raises(SessionizeError):
            ingest.sessionize([], events, meta)

    def test_edurange_undeclared_task(self, edurange_meta):
        entry = StreamEntry("e1", "c1", "t9", 1000, "ls", "")
        with pytest.raises(SessionizeError):
            ingest.sessionize([entry], [], edurange_meta)

    def test_sessions_sorted_by_student(self):
        meta = ExerciseMeta("ex1", 1, ingest.KYPO)
        commands = make_commands(("zz", 1000, "ls"), ("aa", 2000, "pwd"))
        sessions = ingest.sessionize(commands, [], meta)
        assert [s.student_id for s in sessions] == ["aa", "zz"]


class TestTruncate:
    def test_keeps_ceil(self, kypo_session):
        half = ingest.truncate_session(kypo_session, 0.5)
        assert len(half.commands) == math.ceil(0.5 * 5)
        assert len(half.events) == math.ceil(0.5 * 7)

    def test_full_fraction_identity(self, kypo_session):
        same = ingest.truncate_session(kypo_session, 1.0)
        assert same.commands == kypo_session.commands
        assert same.events == kypo_session.events
        assert same.end_time == kypo_session.end_time

    def test_end_time_recomputed(self, kypo_session):
        half = ingest.truncate_session(kypo_session, 0.5)
        kept = [e.timestamp for e in half.commands + half.events]
        assert half.end_time == max(kept)
        assert half.start_time == kypo_session.start_time

    def test_task_count_unchanged(self, kypo_session):
        assert ingest.truncate_session(kypo_session, 0.3).task_count == 2

    @pytest.mark.parametrize("fraction", [0.0, -0.5, 1.5])
    def test_fraction_out_of_range(self, kypo_session, fraction):
        with pytest.raises(ValueError):
            ingest.truncate_session(kypo_session, fraction)

    @given(st.floats(min_value=0.01, max_value=1.0), st.integers(1, 20))
    def test_counts_property(self, fraction, n):
        meta = ExerciseMeta("ex1", 1, ingest.KYPO)
        commands = make_commands(*[("s1", 1000 + i, f"cmd{i}") for i in range(n)])
        (session,) = ingest.sessionize(commands, [], meta)
        out = ingest.truncate_session(session, fraction)
        assert len(out.commands) == math.ceil(fraction * n)


class TestSerialization:
    def test_command_round_trip(self, kypo_session):
        text = ingest.to_jsonl(kypo_session.commands)
        back = ingest.parse_kypo_command_log(text).entries
        assert back == kypo_session.commands

    def test_stream_round_trip(self, edurange_session):
        text = ingest.to_jsonl(edurange_session.commands)
        back = ingest.parse_edurange_log(text).entries
        assert back == edurange_session.commands

    def test_meta_round_trip(self, edurange_meta):
        doc = ingest.exercise_meta_doc(edurange_meta)
        again = ingest.load_exercise_meta(json.loads(json.dumps(doc)))
        assert again == edurange_meta
