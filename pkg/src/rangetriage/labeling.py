"""Binary outcome labels for exercise sessions.

Label 1 marks the unsuccessful (at-risk) student and is the positive class
throughout the toolkit. Platform rules differ because the platforms record
different evidence of progress: answer/solution events versus detected task
completions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .commands import TaskCompletion
from .ingest import EDURANGE, KYPO, SessionRecord

UNSUCCESSFUL = 1
SUCCESSFUL = 0


@dataclass(frozen=True)
class OutcomeLabel:
    student_id: str
    label: int  # 1 = unsuccessful (positive class)
    completion_ratio: float
    rationale: str


@dataclass(frozen=True)
class LabelDistribution:
    positive_count: int
    negative_count: int

    @property
    def total(self) -> int:
        return self.positive_count + self.negative_count


def label_kypo(session: SessionRecord, solution_cap: float = 0.5) -> OutcomeLabel:
    """Label a kypo_style session.

    Successful (0) iff the student displayed solutions on at most
    ``solution_cap`` of the tasks and submitted a correct answer for every
    task. Viewing a solution and then answering correctly still counts as an
    answered task; the solution cap is an independent condition.
    completion_ratio is the fraction of tasks with a correct answer.
    """
    if session.platform != KYPO:
        raise ValueError(f"expected a {KYPO} session, got {session.platform}")
    all_tasks = set(range(1, session.task_count + 1))
    answered = {
        e.task_index
        for e in session.events
        if e.kind == "correct_answer" and e.task_index in all_tasks
    }
    revealed = {
        e.task_index
        for e in session.events
        if e.kind == "solution_displayed" and e.task_index in all_tasks
    }
    ratio = len(answered) / session.task_count
    within_cap = len(revealed) <= solution_cap * session.task_count
    label = SUCCESSFUL if within_cap and answered == all_tasks else UNSUCCESSFUL
    rationale = (
        f"{len(answered)}/{session.task_count} tasks answered, "
        f"solutions on {len(revealed)}/{session.task_count}"
    )
    return OutcomeLabel(session.student_id, label, ratio, rationale)


def label_edurange(
    session: SessionRecord,
    completions: Sequence[TaskCompletion],
    completion_threshold: float = 0.5,
) -> OutcomeLabel:
    """Label an edurange_style session from its detected task completions.

    Successful (0) iff the student completed at least
    max(1, floor(task_count * completion_threshold)) tasks.
    """
    if session.platform != EDURANGE:
        raise ValueError(f"expected an {EDURANGE} session, got {session.platform}")
    needed = max(1, math.floor(session.task_count * completion_threshold))
    done = len({c.task_id for c in completions})
    ratio = done / session.task_count
    label = SUCCESSFUL if done >= needed else UNSUCCESSFUL
    rationale = f"{done}/{session.task_count} tasks completed, needed {needed}"
    return OutcomeLabel(session.student_id, label, ratio, rationale)


def label_distribution(labels: Iterable[OutcomeLabel]) -> LabelDistribution:
    """Count positive (unsuccessful) and negative (successful) labels."""
    positive = negative = 0
    for item in labels:
        if item.label == UNSUCCESSFUL:
            positive += 1
        else:
            negative += 1
    return LabelDistribution(positive, negative)
