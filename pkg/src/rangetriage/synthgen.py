"""Seeded generator of synthetic exercise sessions with known outcomes.

Each archetype describes one student behavior profile (command volume,
pacing, wrong answers, solution peeking, early dropout). Sessions are built
task by task on a single monotonic clock, serialized through the same entry
types the parsers produce, and labeled with the real labeling rules, so the
returned ground truth is the induced label by construction, not a promise.

Timing and count parameters are clamped so that extracted feature values
stay inside the ranges observed on real cohorts (the per-minute rate
features excepted; those depend on total session span, which is not
modeled). The envelope guarantees assume task_count >= 3; smaller exercises
still generate and label correctly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .classifiers import Dataset
from .commands import SolutionSpec, detect_task_completions
from .features import feature_catalog, feature_matrix, session_features
from .ingest import (
    EDURANGE,
    KYPO,
    CommandEntry,
    EventEntry,
    ExerciseMeta,
    SessionRecord,
    StreamEntry,
    parse_timestamp_ms,
    sessionize,
)
from .labeling import label_edurange, label_kypo

_EPOCH_MS = parse_timestamp_ms("2025-03-10T08:00:00Z")

# Timing constants (seconds). The clamps keep per-session feature values
# inside the observed real-cohort ranges: command gaps stay modest, the
# first task always resolves quickly (so the fastest completion is fast),
# and the last attempted task always resolves slowly (so the slowest
# completion is slow).
_GAP_LO = 15.0
_GAP_HI = 280.0
_FIRST_GAP_HI = 60.0
_TASK_GAP_LO = 60.0
_TASK_GAP_HI = 180.0
_ANSWER_FLOOR = 262.0
_SLOW_FLOOR = 470.0
_FIRST_DONE_LO = 150.0
_FIRST_DONE_HI = 310.0
_ONLY_DONE_LO = 240.0
_ANSWER_STEP = 60.0

_MAX_WRONGS = 3
_MAX_ERRORS_PER_TASK = 3
_COUNT_LO = 2
_COUNT_HI = 10
_FIRST_COUNT_HI = 4
_BIG_COUNT_LO = 5
_RUN_CAP = 3  # longest tolerated repeat of one command text while drawing


@dataclass(frozen=True)
class ArchetypeParams:
    """Behavior profile with a deterministic outcome under the label rules.

    commands_mean/commands_spread parameterize a shifted Poisson for the
    per-task command count: count = shift + Poisson(mean - shift) with
    shift = max(2, ceil(mean - spread)), so the spread caps the variance.
    gap_mean_seconds/gap_sigma parameterize a log-normal inter-command gap
    with the given mean. wrong_answer_rate is the Poisson mean of wrong
    submissions per task (capped at 3). solution_probability is the
    fraction of tasks on which the solution is displayed (rounded up, so
    any value above 0.5 forces an unsuccessful label). error_probability
    is the per-command chance of an error output on terminal-stream
    platforms. dropout, when set, stops the session after that fraction of
    tasks (at least one task is always attempted).
    """

    name: str
    commands_mean: float
    commands_spread: float
    gap_mean_seconds: float
    gap_sigma: float
    wrong_answer_rate: float
    solution_probability: float
    error_probability: float
    dropout: float | None = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("archetype needs a name")
        for label in ("solution_probability", "error_probability"):
            p = getattr(self, label)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{label} must be in [0, 1], got {p}")
        if self.gap_mean_seconds <= 0:
            raise ValueError("gap_mean_seconds must be positive")
        if self.commands_mean <= 0:
            raise ValueError("commands_mean must be positive")
        if self.commands_spread < 0 or self.gap_sigma < 0:
            raise ValueError("spread parameters must be non-negative")
        if self.wrong_answer_rate < 0:
            raise ValueError("wrong_answer_rate must be non-negative")
        if self.dropout is not None and not 0.0 < self.dropout <= 1.0:
            raise ValueError(f"dropout must be in (0, 1], got {self.dropout}")


PRESETS: dict[str, ArchetypeParams] = {
    "solver": ArchetypeParams(
        name="solver",
        commands_mean=5.0,
        commands_spread=2.0,
        gap_mean_seconds=40.0,
        gap_sigma=0.5,
        wrong_answer_rate=0.25,
        solution_probability=0.0,
        error_probability=0.05,
    ),
    "struggler": ArchetypeParams(
        name="struggler",
        commands_mean=8.0,
        commands_spread=2.0,
        gap_mean_seconds=110.0,
        gap_sigma=0.7,
        wrong_answer_rate=1.8,
        solution_probability=0.7,
        error_probability=0.3,
    ),
    "quitter": ArchetypeParams(
        name="quitter",
        commands_mean=4.0,
        commands_spread=1.5,
        gap_mean_seconds=70.0,
        gap_sigma=0.6,
        wrong_answer_rate=0.8,
        solution_probability=0.0,
        error_probability=0.15,
        dropout=0.4,
    ),
}

DEFAULT_MIX: dict[str, float] = {"solver": 0.75, "struggler": 0.25}


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int
    student_count: int
    mix: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_MIX))
    platform: str = KYPO
    task_count: int = 6

    def __post_init__(self):
        if self.student_count < 1:
            raise ValueError("student_count must be at least 1")
        if self.task_count < 1:
            raise ValueError("task_count must be at least 1")
        if self.platform not in (KYPO, EDURANGE):
            raise ValueError(f"unknown platform {self.platform!r}")
        if not self.mix:
            raise ValueError("mix must name at least one archetype")
        weights = list(self.mix.values())
        if min(weights) < 0:
            raise ValueError("mix weights must be non-negative")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ValueError(f"mix weights must sum to 1, got {sum(weights)}")


def _solution_command(task: int) -> str:
    return f"grep -r flag /opt/task{task}/data"


def synthetic_exercise_meta(platform: str, task_count: int) -> ExerciseMeta:
    """Exercise metadata matching generated sessions, for re-ingestion."""
    if platform == KYPO:
        return ExerciseMeta(
            exercise_id=f"synth-kypo-{task_count}",
            task_count=task_count,
            platform=KYPO,
        )
    if platform != EDURANGE:
        raise ValueError(f"unknown platform {platform!r}")
    solutions = {
        f"t{k}": [
            SolutionSpec(
                task_id=f"t{k}",
                tool="grep",
                required_options=("-r",),
                required_arguments=("flag", f"/opt/task{k}/data"),
            )
        ]
        for k in range(1, task_count + 1)
    }
    return ExerciseMeta(
        exercise_id=f"synth-edurange-{task_count}",
        task_count=task_count,
        platform=EDURANGE,
        solutions=solutions,
    )


def _draw_count(rng, arch: ArchetypeParams, lo: int, hi: int) -> int:
    shift = max(_COUNT_LO, math.ceil(arch.commands_mean - arch.commands_spread))
    lam = max(0.0, arch.commands_mean - shift)
    return int(np.clip(shift + rng.poisson(lam), lo, hi))


def _draw_gap(rng, arch: ArchetypeParams, hi: float = _GAP_HI) -> float:
    mu = math.log(arch.gap_mean_seconds) - arch.gap_sigma**2 / 2.0
    return float(np.clip(rng.lognormal(mu, arch.gap_sigma), _GAP_LO, hi))


def _entered_tasks(arch: ArchetypeParams, task_count: int) -> list[int]:
    tasks = list(range(1, task_count + 1))
    if arch.dropout is None:
        return tasks
    return tasks[: max(1, math.floor(arch.dropout * task_count))]


def _kypo_pool(task: int, first: bool) -> list[tuple[str, str]]:
    # The leading pair shares a tool so every session shows at least one
    # back-to-back same-tool stretch, as real sessions always do.
    pool = [
        (f"nmap -sV 10.0.{task}.5", "shell"),
        (f"nmap -p- 10.0.{task}.5", "shell"),
    ]
    if first:
        pool.append(("ls -la", "shell"))
        return pool
    pool.extend(
        [
            (f"ssh admin@10.0.{task}.5", "shell"),
            ("ls -la", "shell"),
            (f"cat notes_{task}.md | grep cred", "shell"),
            (f"hydra -l admin -P rockyou.txt ssh://10.0.{task}.5", "shell"),
            ("ip addr", "shell"),
        ]
    )
    if task >= 3:
        pool.append(("use exploit/multi/ssh/sshexec", "msf"))
    return pool


def _draw_texts(rng, pool: list, count: int) -> list:
    """Draw count items: the forced leading pair, then capped-run choices."""
    picks = [pool[0], pool[1]][:count]
    extras = pool[2:] or pool
    run = 1
    while len(picks) < count:
        choice = extras[int(rng.integers(len(extras)))]
        if picks and choice == picks[-1]:
            if run >= _RUN_CAP:
                choice = extras[(extras.index(choice) + 1) % len(extras)]
                run = 1
            else:
                run += 1
        else:
            run = 1
        picks.append(choice)
    return picks


def _ms(base_ms: int, delta_seconds: float) -> int:
    return base_ms + int(round(delta_seconds * 1000.0))


def _build_kypo(
    rng, arch: ArchetypeParams, task_count: int, student_id: str, meta: ExerciseMeta
) -> tuple[list[CommandEntry], list[EventEntry]]:
    entered = _entered_tasks(arch, task_count)
    revealed = set(entered[: min(len(entered), math.ceil(arch.solution_probability * task_count))])
    slow_task = entered[-1] if len(entered) >= 2 else None

    commands: list[CommandEntry] = []
    events: list[EventEntry] = []
    clock = _EPOCH_MS

    def event(kind: str, at_ms: int, task: int, answer: str | None = None):
        events.append(
            EventEntry(
                student_id=student_id,
                timestamp=at_ms,
                exercise_id=meta.exercise_id,
                task_index=task,
                kind=kind,
                answer_text=answer,
            )
        )

    for task in entered:
        first = task == entered[0]
        count = _draw_count(rng, arch, _COUNT_LO, _FIRST_COUNT_HI if first else _COUNT_HI)
        event("level_started", clock, task)

        elapsed = 0.0
        for text, interpreter in _draw_texts(rng, _kypo_pool(task, first), count):
            elapsed += _draw_gap(rng, arch, _FIRST_GAP_HI if first else _GAP_HI)
            commands.append(
                CommandEntry(
                    student_id=student_id,
                    timestamp=_ms(clock, elapsed),
                    interpreter=interpreter,
                    command_text=text,
                )
            )

        if task in revealed:
            event("solution_displayed", _ms(clock, elapsed + 30.0), task)

        wrongs = 0 if first else min(_MAX_WRONGS, int(rng.poisson(arch.wrong_answer_rate)))
        if first:
            answer_at = rng.uniform(max(_FIRST_DONE_LO, elapsed + 45.0), _FIRST_DONE_HI)
        elif task == slow_task:
            answer_at = max(_SLOW_FLOOR, elapsed + 60.0) + rng.uniform(0.0, 90.0)
        else:
            answer_at = max(_ANSWER_FLOOR, elapsed + 60.0) + rng.uniform(0.0, 90.0)
        for w in range(wrongs):
            event("wrong_answer", _ms(clock, answer_at + _ANSWER_STEP * w), task, f"guess-{w + 1}")
        done_at = answer_at + _ANSWER_STEP * wrongs
        event("correct_answer", _ms(clock, done_at), task, f"flag-{task}")
        clock = _ms(clock, done_at + rng.uniform(_TASK_GAP_LO, _TASK_GAP_HI))

    if arch.dropout is None:
        event("training_completed", clock, task_count)
    return commands, events


_DECOY_OUTPUTS = {
    "ls": "total 8\nREADME  data",
    "cat": "start in data/, the flag string is hidden there",
    "find": "data/notes",
}


def _edurange_decoys(task: int, first: bool, completed: bool) -> list[str]:
    # Real cohorts always include a task where the student barely explored:
    # the first task keeps at most two distinct input lines (solution
    # command included), so one decoy text when the solution follows.
    decoys = [f"ls -la /opt/task{task}", f"cat /opt/task{task}/README"]
    if first:
        return decoys[:1] if completed else decoys
    decoys.append(f"find /opt/task{task} -name notes")
    return decoys


def _build_edurange(
    rng, arch: ArchetypeParams, task_count: int, student_id: str, meta: ExerciseMeta
) -> list[StreamEntry]:
    entered = _entered_tasks(arch, task_count)
    if arch.dropout is not None:
        completed = list(entered)
    elif arch.solution_probability > 0.5:
        # Deliberately lands one task short of the success threshold.
        completed = entered[: max(0, max(1, math.floor(task_count * 0.5)) - 1)]
    else:
        completed = list(entered)
    completed_set = set(completed)
    slow_task = completed[-1] if len(completed) >= 2 else None
    only_completion = len(completed) == 1

    entries: list[StreamEntry] = []
    clock = _EPOCH_MS
    course_id = f"course-{meta.exercise_id}"

    for task in entered:
        first = task == entered[0]
        big = len(entered) >= 2 and task == entered[1]
        if first:
            count = _draw_count(rng, arch, _COUNT_LO, _FIRST_COUNT_HI)
        elif big:
            count = _draw_count(rng, arch, _BIG_COUNT_LO, _COUNT_HI)
        else:
            count = _draw_count(rng, arch, _COUNT_LO, _COUNT_HI)

        decoys = _edurange_decoys(task, first, task in completed_set)
        decoy_count = count - 1 if task in completed_set else count
        errors = 0
        elapsed = 0.0
        for i in range(decoy_count):
            elapsed += 0.0 if i == 0 else _draw_gap(rng, arch, _FIRST_GAP_HI if first else _GAP_HI)
            text = decoys[i % len(decoys)]
            tool = text.split()[0]
            if errors < _MAX_ERRORS_PER_TASK and rng.random() < arch.error_probability:
                output = f"bash: {tool}: command not found"
                errors += 1
            else:
                output = _DECOY_OUTPUTS[tool]
            entries.append(
                StreamEntry(
                    student_id=student_id,
                    course_id=course_id,
                    task_id=f"t{task}",
                    timestamp=_ms(clock, elapsed),
                    input_text=text,
                    output_text=output,
                )
            )

        if task in completed_set:
            if first:
                lo = _ONLY_DONE_LO if only_completion else _FIRST_DONE_LO
                done_at = rng.uniform(max(lo, elapsed + 15.0), _FIRST_DONE_HI)
            elif task == slow_task:
                done_at = max(_SLOW_FLOOR, elapsed + 60.0) + rng.uniform(0.0, 90.0)
            else:
                done_at = max(_ANSWER_FLOOR, elapsed + 60.0) + rng.uniform(0.0, 90.0)
            entries.append(
                StreamEntry(
                    student_id=student_id,
                    course_id=course_id,
                    task_id=f"t{task}",
                    timestamp=_ms(clock, done_at),
                    input_text=_solution_command(task),
                    output_text=f"data/creds.txt:flag{{synth-{task}}}",
                )
            )
            elapsed = done_at
        clock = _ms(clock, elapsed + rng.uniform(_TASK_GAP_LO, _TASK_GAP_HI))
    return entries


def generate_session(
    arch: ArchetypeParams,
    platform: str,
    task_count: int,
    seed: int,
    student_id: str | None = None,
) -> tuple[SessionRecord, int]:
    """Generate one session and its ground-truth label (1 = unsuccessful).

    The label is computed by running the labeling rules on the generated
    session, so it always matches what re-ingesting the serialized entries
    would produce.
    """
    meta = synthetic_exercise_meta(platform, task_count)
    rng = np.random.default_rng(seed)
    if student_id is None:
        student_id = f"synth-{seed & 0xFFFFFFFF:08x}"

    if platform == KYPO:
        commands, events = _build_kypo(rng, arch, task_count, student_id, meta)
        session = sessionize(commands, events, meta)[0]
        return session, label_kypo(session).label
    entries = _build_edurange(rng, arch, task_count, student_id, meta)
    session = sessionize(entries, [], meta)[0]
    completions = detect_task_completions(session, meta.solutions)
    return session, label_edurange(session, completions).label


def generate_dataset(
    cfg: GeneratorConfig,
    archetypes: Mapping[str, ArchetypeParams] | None = None,
) -> tuple[list[SessionRecord], list[int]]:
    """Generate a cohort of sessions with per-student archetypes drawn from the mix."""
    lookup = PRESETS if archetypes is None else archetypes
    names = sorted(cfg.mix)
    for name in names:
        if name not in lookup:
            raise ValueError(f"unknown archetype {name!r}")
    weights = np.array([cfg.mix[n] for n in names], dtype=float)
    weights = weights / weights.sum()

    children = np.random.SeedSequence(cfg.seed).spawn(cfg.student_count + 1)
    assign_rng = np.random.default_rng(children[0])
    sessions: list[SessionRecord] = []
    labels: list[int] = []
    for i in range(cfg.student_count):
        name = names[int(assign_rng.choice(len(names), p=weights))]
        seed = int(children[i + 1].generate_state(1)[0])
        session, label = generate_session(
            lookup[name], cfg.platform, cfg.task_count, seed, student_id=f"stu-{i:04d}"
        )
        sessions.append(session)
        labels.append(label)
    return sessions, labels


def sessions_to_dataset(
    sessions: list[SessionRecord], labels: list[int], meta: ExerciseMeta | None = None
) -> Dataset:
    """Extract features from sessions and assemble the modeling dataset."""
    if not sessions:
        raise ValueError("no sessions")
    platforms = {s.platform for s in sessions}
    if len(platforms) > 1:
        raise ValueError(f"mixed platforms in one dataset: {sorted(platforms)}")
    solutions = meta.solutions if meta is not None else None
    patterns = meta.error_patterns if meta is not None else None
    vectors = [session_features(s, solutions, patterns) for s in sessions]
    X, _, ids = feature_matrix(vectors)
    names = [d.name for d in feature_catalog(sessions[0].platform)]
    return Dataset(X, np.asarray(labels, dtype=int), ids, names)
