"""Shared fixtures: golden sessions loaded through the full ingest path."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from rangetriage import ingest

FIXTURES = Path(__file__).parent / "fixtures"

# Frozen expected feature vectors for the golden fixtures. Derived by the
# independent arithmetic in golden_derivation.py (run its __main__ to
# reproduce); any change here must be re-derived there first.
GOLDEN_KYPO_VECTOR = [
    2.5, 2.0, 3.0, 0.5, 2.0, 60.0,
    2.5, 2.0, 3.0, 0.5, 2.0, 70.0,
    0.5, 0.0, 0.0, 60.0,
    1.0, 2.0, 170.0, 245.0, 90.0, 400.0,
    295.0, 190.0, 400.0,
]
GOLDEN_EDURANGE_VECTOR = [
    5.0, 4.0, 6.0, 2.0, 3.0, 33.333333333333336,
    3.5, 3.0, 4.0,
    1.0, 1.0,
    60.0, 60.0, 60.0, 120.0,
]


def load_kypo_fixture():
    commands = ingest.parse_kypo_command_log(
        (FIXTURES / "kypo_commands.jsonl").read_bytes()
    ).entries
    events = ingest.parse_kypo_event_log(
        (FIXTURES / "kypo_events.jsonl").read_bytes()
    ).entries
    meta = ingest.load_exercise_meta(
        json.loads((FIXTURES / "kypo_meta.json").read_text())
    )
    commands, _ = ingest.clean_records(commands)
    events, _ = ingest.clean_records(events)
    return ingest.sessionize(commands, events, meta), meta


def load_edurange_fixture():
    streams = ingest.parse_edurange_log(
        (FIXTURES / "edurange_streams.jsonl").read_bytes()
    ).entries
    meta = ingest.load_exercise_meta(
        json.loads((FIXTURES / "edurange_meta.json").read_text())
    )
    streams, _ = ingest.clean_records(streams)
    return ingest.sessionize(streams, [], meta), meta


@pytest.fixture
def kypo_session():
    sessions, meta = load_kypo_fixture()
    assert len(sessions) == 1
    return sessions[0]


@pytest.fixture
def kypo_meta():
    return load_kypo_fixture()[1]


@pytest.fixture
def edurange_session():
    sessions, meta = load_edurange_fixture()
    assert len(sessions) == 1
    return sessions[0]


@pytest.fixture
def edurange_meta():
    return load_edurange_fixture()[1]
