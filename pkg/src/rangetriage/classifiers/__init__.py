"""Binary classifiers for at-risk prediction, trained from first principles.

Ten model kinds share one interface: ``train_model`` fits on a unitized
matrix and 0/1 labels, ``predict_scores`` emits class-1 probabilities (or
a calibrated surrogate), ``predict_labels`` thresholds them. Models are
plain data and serialize to self-describing JSON documents.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .baseline import fit_majority, majority_scores, random_scores
from .bayes import fit_naive_bayes, naive_bayes_scores
from .ensemble import (
    boosted_margins,
    boosted_scores,
    fit_boosted_trees,
    fit_random_forest,
    forest_scores,
)
from .linear import (
    fit_l1_logistic,
    fit_linear_svm,
    fit_logistic,
    linear_scores,
    logistic_gradient,
    logistic_objective,
    sigmoid,
)
from .neighbors import knn_scores
from .svm import fit_svm_rbf, svm_rbf_decision
from .tree import build_tree, route_values

MODEL_KINDS = (
    "logistic_regression",
    "naive_bayes",
    "svm_linear",
    "svm_rbf",
    "knn",
    "decision_tree",
    "random_forest",
    "gradient_boosted_trees",
    "baseline_majority",
    "baseline_random",
)
BASELINE_KINDS = ("baseline_majority", "baseline_random")

DEFAULT_GRIDS: dict[str, tuple[dict, ...]] = {
    "logistic_regression": tuple({"C": c} for c in (0.01, 0.1, 1.0, 10.0)),
    "naive_bayes": ({},),
    "svm_linear": tuple({"C": c} for c in (0.1, 1.0, 10.0)),
    "svm_rbf": tuple(
        {"C": c, "gamma": g} for c in (0.1, 1.0, 10.0) for g in (0.01, 0.1, "scale")
    ),
    "knn": tuple({"k": k} for k in (3, 5, 7, 9)),
    "decision_tree": tuple(
        {"max_depth": depth, "min_leaf": leaf}
        for depth in (2, 3, 4, 5, 16)
        for leaf in (1, 3, 5)
    ),
    "random_forest": tuple(
        {"n_trees": trees, "max_depth": depth}
        for trees in (100, 300)
        for depth in (8, 16)
    ),
    "gradient_boosted_trees": tuple(
        {"rounds": rounds, "learning_rate": rate, "max_depth": depth}
        for rounds in (50, 100)
        for rate in (0.1, 0.3)
        for depth in (2, 3)
    ),
    "baseline_majority": ({},),
    "baseline_random": ({},),
}

_DEFAULT_HP: dict[str, dict] = {
    "logistic_regression": {"C": 1.0},
    "naive_bayes": {},
    "svm_linear": {"C": 1.0},
    "svm_rbf": {"C": 1.0, "gamma": "scale"},
    "knn": {"k": 5},
    "decision_tree": {"max_depth": 16, "min_leaf": 1},
    "random_forest": {"n_trees": 100, "max_depth": 16},
    "gradient_boosted_trees": {"rounds": 100, "learning_rate": 0.1, "max_depth": 3},
    "baseline_majority": {},
    "baseline_random": {},
}


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with labels, one row per student."""

    X: np.ndarray
    y: np.ndarray
    student_ids: list[str]
    feature_ids: list[int]

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=int)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if X.ndim != 2:
            raise ValueError("X must be 2-D")
        if len(y) != X.shape[0] or len(self.student_ids) != X.shape[0]:
            raise ValueError("rows, labels and student ids must align")
        if len(self.feature_ids) != X.shape[1]:
            raise ValueError("feature ids must match the column count")
        if not set(np.unique(y)) <= {0, 1}:
            raise ValueError("labels must be 0 or 1")


@dataclass
class TrainedModel:
    kind: str
    hyperparameters: dict
    seed: int
    feature_ids: list[int]
    params: dict = field(repr=False)


def train_model(
    kind: str,
    X: np.ndarray,
    y: Sequence[int],
    hyperparameters: dict | None = None,
    seed: int = 0,
    feature_ids: Sequence[int] | None = None,
) -> TrainedModel:
    """Fit one model kind. Identical inputs give an identical model."""
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind: {kind}")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or len(y) != X.shape[0]:
        raise ValueError("X must be 2-D with one label per row")
    if kind not in BASELINE_KINDS and len(np.unique(y)) < 2:
        raise ValueError(f"{kind} needs both classes in y")
    hp = {**_DEFAULT_HP[kind], **(hyperparameters or {})}
    yf = y.astype(float)

    if kind == "logistic_regression":
        params = {"theta": fit_logistic(X, yf, hp["C"]).tolist()}
    elif kind == "naive_bayes":
        params = fit_naive_bayes(X, y)
    elif kind == "svm_linear":
        params = {"theta": fit_linear_svm(X, yf, hp["C"]).tolist()}
    elif kind == "svm_rbf":
        params = fit_svm_rbf(X, yf, hp["C"], hp["gamma"])
    elif kind == "knn":
        params = {"train_X": X.tolist(), "train_y": y.tolist(), "k": int(hp["k"])}
    elif kind == "decision_tree":
        params = {"tree": build_tree(X, yf, hp["max_depth"], hp["min_leaf"])}
    elif kind == "random_forest":
        params = fit_random_forest(X, yf, hp["n_trees"], hp["max_depth"], seed)
    elif kind == "gradient_boosted_trees":
        params = fit_boosted_trees(
            X, yf, hp["rounds"], hp["learning_rate"], hp["max_depth"]
        )
    elif kind == "baseline_majority":
        params = fit_majority(y)
    else:
        params = {}

    ids = list(feature_ids) if feature_ids is not None else list(range(X.shape[1]))
    return TrainedModel(kind, hp, seed, ids, params)


def predict_scores(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """Class-1 scores in [0, 1], one per row."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(model.feature_ids):
        raise ValueError(
            f"expected {len(model.feature_ids)} features, got shape {X.shape}"
        )
    kind = model.kind
    if kind == "logistic_regression" or kind == "svm_linear":
        return linear_scores(np.asarray(model.params["theta"]), X)
    if kind == "naive_bayes":
        return naive_bayes_scores(model.params, X)
    if kind == "svm_rbf":
        return sigmoid(svm_rbf_decision(model.params, X))
    if kind == "knn":
        return knn_scores(
            model.params["train_X"], model.params["train_y"], model.params["k"], X
        )
    if kind == "decision_tree":
        return route_values(model.params["tree"], X)
    if kind == "random_forest":
        return forest_scores(model.params, X)
    if kind == "gradient_boosted_trees":
        return boosted_scores(model.params, X)
    if kind == "baseline_majority":
        return majority_scores(model.params, X)
    return random_scores(model.seed, X)


def predict_labels(
    model: TrainedModel, X: np.ndarray, threshold: float = 0.5
) -> np.ndarray:
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be within [0, 1]")
    return (predict_scores(model, X) >= threshold).astype(int)


def model_to_dict(model: TrainedModel) -> dict:
    """Self-describing JSON document for a trained model."""
    return {
        "kind": model.kind,
        "hyperparameters": model.hyperparameters,
        "seed": model.seed,
        "feature_ids": model.feature_ids,
        "parameters": model.params,
    }


def model_from_dict(doc: dict) -> TrainedModel:
    if doc.get("kind") not in MODEL_KINDS:
        raise ValueError(f"unknown model kind: {doc.get('kind')}")
    return TrainedModel(
        kind=doc["kind"],
        hyperparameters=doc["hyperparameters"],
        seed=doc["seed"],
        feature_ids=doc["feature_ids"],
        params=doc["parameters"],
    )


__all__ = [
    "BASELINE_KINDS",
    "DEFAULT_GRIDS",
    "Dataset",
    "MODEL_KINDS",
    "TrainedModel",
    "boosted_margins",
    "fit_l1_logistic",
    "logistic_gradient",
    "logistic_objective",
    "model_from_dict",
    "model_to_dict",
    "predict_labels",
    "predict_scores",
    "sigmoid",
    "train_model",
]
