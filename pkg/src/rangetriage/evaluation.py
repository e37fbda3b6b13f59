"""Metrics and stratified nested cross-validation with embedded selection.

The positive class is 1 (the at-risk student). Metrics with a zero
denominator are reported as None rather than coerced to a number, and
macro averages skip undefined folds with a warning.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .classifiers import (
    BASELINE_KINDS,
    DEFAULT_GRIDS,
    MODEL_KINDS,
    Dataset,
    predict_scores,
    train_model,
)
from .classifiers.linear import fit_l1_logistic, linear_scores
from .features import apply_scaler, fit_scaler

DEFAULT_L1_PENALTIES = (0.01, 0.03, 0.1, 0.3, 1.0)
COEF_CUTOFF = 1e-6
METRIC_NAMES = ("sensitivity", "specificity", "balanced_accuracy", "auc")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fn: int
    tn: int
    fp: int

    def __post_init__(self):
        if min(self.tp, self.fn, self.tn, self.fp) < 0:
            raise ValueError("confusion counts must be non-negative")

    @classmethod
    def from_labels(cls, y_true, y_pred) -> "ConfusionCounts":
        y_true = np.asarray(y_true, dtype=int)
        y_pred = np.asarray(y_pred, dtype=int)
        if y_true.shape != y_pred.shape:
            raise ValueError("label arrays must align")
        return cls(
            tp=int(((y_true == 1) & (y_pred == 1)).sum()),
            fn=int(((y_true == 1) & (y_pred == 0)).sum()),
            tn=int(((y_true == 0) & (y_pred == 0)).sum()),
            fp=int(((y_true == 0) & (y_pred == 1)).sum()),
        )


@dataclass(frozen=True)
class MetricReport:
    """Per-fold or macro metrics; None marks an undefined value."""

    sensitivity: float | None
    specificity: float | None
    balanced_accuracy: float | None
    auc: float | None = None

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def compute_metrics(counts: ConfusionCounts) -> MetricReport:
    positives = counts.tp + counts.fn
    negatives = counts.tn + counts.fp
    sensitivity = counts.tp / positives if positives else None
    specificity = counts.tn / negatives if negatives else None
    balanced = (
        (sensitivity + specificity) / 2.0
        if sensitivity is not None and specificity is not None
        else None
    )
    return MetricReport(sensitivity, specificity, balanced)


def compute_auc(y, scores) -> float | None:
    """Rank-based AUC with midrank tie handling; None on single-class y."""
    y = np.asarray(y, dtype=int)
    scores = np.asarray(scores, dtype=float)
    n = len(y)
    n_pos = int(y.sum())
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    order = np.argsort(scores, kind="mergesort")
    ordered = scores[order]
    bounds = np.flatnonzero(np.r_[True, ordered[1:] != ordered[:-1], True])
    ranks = np.empty(n)
    for start, stop in zip(bounds[:-1], bounds[1:]):
        ranks[order[start:stop]] = 0.5 * (start + stop - 1) + 1.0
    rank_sum = float(ranks[y == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def stratified_kfold(y, k: int, seed: int) -> np.ndarray:
    """Per-row fold indices: seeded shuffle within each class, then
    round-robin with one rolling counter across classes.

    The rolling counter makes total fold sizes differ by at most one in
    addition to the per-class balance the round-robin already gives.
    """
    y = np.asarray(y, dtype=int)
    n = len(y)
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > n:
        raise ValueError(f"cannot make {k} folds from {n} rows")
    rng = np.random.default_rng(seed)
    assignment = np.empty(n, dtype=int)
    counter = 0
    for label in np.unique(y):
        members = np.flatnonzero(y == label)
        if len(members) < k:
            warnings.warn(
                f"class {label} has {len(members)} rows for {k} folds; "
                "some folds will miss it",
                RuntimeWarning,
            )
        rng.shuffle(members)
        for row in members:
            assignment[row] = counter % k
            counter += 1
    return assignment


def select_features_l1(
    train_X,
    train_y,
    penalties=DEFAULT_L1_PENALTIES,
    folds: int = 5,
    seed: int = 0,
) -> list[int]:
    """Columns kept by L1-penalized logistic regression.

    The penalty is chosen by stratified validation balanced accuracy on
    the given rows; ties prefer the strongest penalty, leaning on
    parsimony. Columns with |coefficient| > 1e-6 at the chosen penalty
    survive; if none do, every column is returned.
    """
    X = np.asarray(train_X, dtype=float)
    y = np.asarray(train_y, dtype=float)
    assignment = stratified_kfold(y, folds, seed)
    best_penalty = penalties[0]
    best_score = -np.inf
    for penalty in penalties:
        values = []
        for f in range(folds):
            holdout = assignment == f
            theta = fit_l1_logistic(X[~holdout], y[~holdout], penalty)
            labels = (linear_scores(theta, X[holdout]) >= 0.5).astype(int)
            report = compute_metrics(
                ConfusionCounts.from_labels(y[holdout], labels)
            )
            if report.balanced_accuracy is not None:
                values.append(report.balanced_accuracy)
        score = float(np.mean(values)) if values else -1.0
        if score >= best_score:
            best_score = score
            best_penalty = penalty
    theta = fit_l1_logistic(X, y, best_penalty)
    selected = [j for j in range(X.shape[1]) if abs(theta[j]) > COEF_CUTOFF]
    return selected if selected else list(range(X.shape[1]))


@dataclass
class FoldResult:
    fold_index: int
    hyperparameters: dict
    selected_features: list[int]
    scaler_mins: list[float]
    scaler_maxs: list[float]
    metrics: MetricReport

    def to_dict(self) -> dict:
        return {
            "fold": self.fold_index,
            "hyperparameters": self.hyperparameters,
            "selected_features": self.selected_features,
            "scaler": {"mins": self.scaler_mins, "maxs": self.scaler_maxs},
            "metrics": self.metrics.to_dict(),
        }


@dataclass
class CVResult:
    kind: str
    seed: int
    outer_k: int
    inner_k: int
    folds: list[FoldResult]
    macro: MetricReport

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "outer_k": self.outer_k,
            "inner_k": self.inner_k,
            "macro": self.macro.to_dict(),
            "folds": [fold.to_dict() for fold in self.folds],
        }


def _tune(kind, X, y, inner_k, seed) -> dict:
    """Best grid config by mean inner balanced accuracy; earliest wins ties."""
    grid = DEFAULT_GRIDS[kind]
    if len(grid) == 1:
        return dict(grid[0])
    assignment = stratified_kfold(y, inner_k, seed)
    best = grid[0]
    best_score = -np.inf
    for config in grid:
        values = []
        for f in range(inner_k):
            holdout = assignment == f
            model = train_model(kind, X[~holdout], y[~holdout], dict(config), seed=seed)
            labels = (predict_scores(model, X[holdout]) >= 0.5).astype(int)
            report = compute_metrics(ConfusionCounts.from_labels(y[holdout], labels))
            if report.balanced_accuracy is not None:
                values.append(report.balanced_accuracy)
        score = float(np.mean(values)) if values else -1.0
        if score > best_score:
            best_score = score
            best = config
    return dict(best)


def tune_hyperparameters(kind: str, X, y, folds: int = 5, seed: int = 0) -> dict:
    """Pick the grid config with the best mean CV balanced accuracy.

    Baselines have single-entry grids and skip the fold loop entirely.
    """
    return _tune(kind, np.asarray(X, dtype=float), np.asarray(y, dtype=int), folds, seed)


def _macro_average(reports: list[MetricReport], kind: str) -> MetricReport:
    values: dict = {}
    for name in METRIC_NAMES:
        defined = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        if len(defined) < len(reports):
            warnings.warn(
                f"{kind}: {len(reports) - len(defined)} of {len(reports)} folds "
                f"have no defined {name}; macro average skips them",
                RuntimeWarning,
            )
        values[name] = float(np.mean(defined)) if defined else None
    return MetricReport(**values)


def nested_cv(
    dataset: Dataset,
    kind: str,
    outer_k: int = 10,
    inner_k: int = 5,
    seed: int = 0,
) -> CVResult:
    """Outer folds estimate generalization; inner folds pick the config.

    Per outer fold, the scaler, the L1 feature selection, and the grid
    search all see outer-train rows only; the winning configuration is
    refit on the whole outer-train split and scored on the held-out fold.
    Baselines skip selection and tuning.
    """
    X_raw = dataset.X
    y = dataset.y
    assignment = stratified_kfold(y, outer_k, seed)
    fold_seeds = [
        int(child.generate_state(1)[0])
        for child in np.random.SeedSequence(seed).spawn(outer_k)
    ]
    folds = []
    for f in range(outer_k):
        test = assignment == f
        scaler = fit_scaler(X_raw[~test])
        X_train = apply_scaler(scaler, X_raw[~test])
        X_test = apply_scaler(scaler, X_raw[test])
        y_train = y[~test]
        y_test = y[test]
        fold_seed = fold_seeds[f]
        if kind in BASELINE_KINDS:
            columns = list(range(X_train.shape[1]))
            hp: dict = {}
        else:
            columns = select_features_l1(
                X_train, y_train, folds=inner_k, seed=fold_seed
            )
            hp = _tune(kind, X_train[:, columns], y_train, inner_k, fold_seed)
        model = train_model(kind, X_train[:, columns], y_train, hp, seed=fold_seed)
        scores = predict_scores(model, X_test[:, columns])
        labels = (scores >= 0.5).astype(int)
        report = replace(
            compute_metrics(ConfusionCounts.from_labels(y_test, labels)),
            auc=compute_auc(y_test, scores),
        )
        folds.append(
            FoldResult(
                fold_index=f,
                hyperparameters=hp,
                selected_features=[dataset.feature_ids[j] for j in columns],
                scaler_mins=scaler.mins.tolist(),
                scaler_maxs=scaler.maxs.tolist(),
                metrics=report,
            )
        )
    macro = _macro_average([fold.metrics for fold in folds], kind)
    return CVResult(kind, seed, outer_k, inner_k, folds, macro)


@dataclass
class ComparisonReport:
    seed: int
    rows: list[dict]
    results: dict[str, CVResult]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "rows": self.rows,
            "models": {kind: res.to_dict() for kind, res in self.results.items()},
        }

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=["kind", *METRIC_NAMES])
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: "" if v is None else v for k, v in row.items()})
        return buffer.getvalue()


def compare_models(
    dataset: Dataset,
    kinds=None,
    seed: int = 0,
    outer_k: int = 10,
    inner_k: int = 5,
) -> ComparisonReport:
    """Nested CV per kind; real models sorted by balanced accuracy
    descending, baselines appended after them."""
    kinds = list(kinds) if kinds is not None else list(MODEL_KINDS)
    results = {
        kind: nested_cv(dataset, kind, outer_k=outer_k, inner_k=inner_k, seed=seed)
        for kind in kinds
    }

    def row(kind: str) -> dict:
        macro = results[kind].macro
        return {"kind": kind, **macro.to_dict()}

    real = [k for k in kinds if k not in BASELINE_KINDS]
    real.sort(
        key=lambda k: (
            -(results[k].macro.balanced_accuracy
              if results[k].macro.balanced_accuracy is not None else -1.0)
        )
    )
    ordered = real + [k for k in kinds if k in BASELINE_KINDS]
    return ComparisonReport(seed, [row(k) for k in ordered], results)
