"""Live risk scoring: per-student assessments and the ranked triage queue.

A trained model plus its preprocessing (scaler, selected features) form a
ModelBundle, the unit the CLI saves and the service loads. Scoring a session
runs the same pipeline as training: extract, impute, unitize, select, score.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .classifiers import (
    TrainedModel,
    predict_scores,
    train_model,
    model_from_dict,
    model_to_dict,
)
from .evaluation import select_features_l1, tune_hyperparameters
from .features import (
    Scaler,
    apply_scaler,
    feature_catalog,
    fit_scaler,
    session_features,
)
from .ingest import EDURANGE, KYPO, SessionRecord

TOP_FEATURE_COUNT = 3


@dataclass(frozen=True)
class RiskAssessment:
    """One student's place in the triage queue.

    top_features holds the selected features whose unitized values sit
    farthest from the 0.5 midpoint, i.e. the most atypical ones.
    """

    student_id: str
    score: float
    rank: int
    top_features: list[tuple[str, float]] = field(default_factory=list)
    acknowledged: bool = False
    updated_at: int = 0

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")
        if self.rank < 1:
            raise ValueError(f"rank must be positive, got {self.rank}")

    def to_dict(self) -> dict:
        return {
            "student_id": self.student_id,
            "score": self.score,
            "rank": self.rank,
            "top_features": [
                {"name": name, "value": value} for name, value in self.top_features
            ],
            "acknowledged": self.acknowledged,
            "updated_at": self.updated_at,
        }


@dataclass(frozen=True)
class ModelBundle:
    """A trained model with everything needed to score raw sessions."""

    model: TrainedModel
    scaler: Scaler
    selected: list[str]
    platform: str
    threshold: float = 0.5
    metrics: dict | None = None

    def to_dict(self) -> dict:
        return {
            "model": model_to_dict(self.model),
            "scaler": self.scaler.to_dict(),
            "selected": list(self.selected),
            "platform": self.platform,
            "threshold": self.threshold,
            "metrics": self.metrics,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelBundle":
        return cls(
            model=model_from_dict(doc["model"]),
            scaler=Scaler.from_dict(doc["scaler"]),
            selected=list(doc["selected"]),
            platform=doc["platform"],
            threshold=float(doc.get("threshold", 0.5)),
            metrics=doc.get("metrics"),
        )


def _selected_columns(platform: str, selected: list[str]) -> list[int]:
    names = [d.name for d in feature_catalog(platform)]
    positions = []
    for name in selected:
        if name not in names:
            raise ValueError(f"feature {name!r} is not in the {platform} catalog")
        positions.append(names.index(name))
    return positions


def score_session(
    model: TrainedModel,
    session: SessionRecord,
    scaler: Scaler,
    selected: list[str],
    solutions: dict | None = None,
    error_patterns=None,
    updated_at: int | None = None,
) -> RiskAssessment:
    """Score one (possibly partial) session through the full pipeline.

    The model must have been trained on the catalog of the session's
    platform; the selected feature names are resolved against that catalog.
    """
    catalog_names = [d.name for d in feature_catalog(session.platform)]
    if list(model.feature_ids) != list(selected):
        raise ValueError("model feature ids do not match the selected features")
    if not set(selected) <= set(catalog_names):
        raise ValueError(
            f"model was not trained on the {session.platform} feature catalog"
        )
    columns = _selected_columns(session.platform, selected)

    vector = session_features(session, solutions, error_patterns)
    row = np.asarray(vector.values, dtype=float)[np.newaxis, :]
    unitized = apply_scaler(scaler, row)[0]
    score = float(predict_scores(model, unitized[columns].reshape(1, -1))[0])
    score = min(1.0, max(0.0, score))

    by_distance = sorted(
        ((name, float(unitized[col])) for name, col in zip(selected, columns)),
        key=lambda item: -abs(item[1] - 0.5),
    )
    return RiskAssessment(
        student_id=session.student_id,
        score=score,
        rank=1,
        top_features=by_distance[:TOP_FEATURE_COUNT],
        acknowledged=False,
        updated_at=session.end_time if updated_at is None else updated_at,
    )


def rank_students(assessments: list[RiskAssessment]) -> list[RiskAssessment]:
    """Sort by score descending (ties by student_id) and assign ranks 1..n."""
    ordered = sorted(assessments, key=lambda a: (-a.score, a.student_id))
    return [replace(a, rank=i + 1) for i, a in enumerate(ordered)]


def score_with_bundle(
    bundle: ModelBundle,
    session: SessionRecord,
    solutions: dict | None = None,
    error_patterns=None,
    updated_at: int | None = None,
) -> RiskAssessment:
    """Bundle-level scoring with a hard platform check."""
    if session.platform != bundle.platform:
        raise ValueError(
            f"bundle was trained for {bundle.platform}, session is {session.platform}"
        )
    return score_session(
        bundle.model,
        session,
        bundle.scaler,
        bundle.selected,
        solutions=solutions,
        error_patterns=error_patterns,
        updated_at=updated_at,
    )


def train_bundle(
    dataset,
    kind: str,
    seed: int = 0,
    tune: bool = True,
    hyperparameters: dict | None = None,
    threshold: float = 0.5,
    metrics: dict | None = None,
) -> ModelBundle:
    """Fit the deployment bundle on a full dataset.

    Mirrors one fold of the evaluation pipeline without a holdout: unitize
    everything, select features once, tune on the selected columns (unless
    explicit hyperparameters are given), then fit the final model.
    """
    X = np.asarray(dataset.X, dtype=float)
    y = np.asarray(dataset.y, dtype=int)
    scaler = fit_scaler(X)
    unitized = apply_scaler(scaler, X)
    if kind in ("baseline_majority", "baseline_random"):
        columns = list(range(X.shape[1]))
        hp: dict = {}
    else:
        columns = select_features_l1(unitized, y, seed=seed)
        if hyperparameters is not None:
            hp = dict(hyperparameters)
        elif tune:
            hp = tune_hyperparameters(kind, unitized[:, columns], y, seed=seed)
        else:
            hp = None
    selected = [dataset.feature_ids[c] for c in columns]
    model = train_model(
        kind, unitized[:, columns], y, hp, seed=seed, feature_ids=selected
    )
    platform = None
    for candidate in (KYPO, EDURANGE):
        if list(dataset.feature_ids) == [d.name for d in feature_catalog(candidate)]:
            platform = candidate
    if platform is None:
        raise ValueError("dataset feature ids match no platform catalog")
    return ModelBundle(
        model=model,
        scaler=scaler,
        selected=selected,
        platform=platform,
        threshold=threshold,
        metrics=metrics,
    )
