"""Naive reference predictors: majority class and seeded coin flips."""

from __future__ import annotations

import numpy as np


def fit_majority(y: np.ndarray) -> dict:
    y = np.asarray(y, dtype=int)
    positives = int(y.sum())
    negatives = len(y) - positives
    return {"majority": 1 if positives > negatives else 0}


def majority_scores(params: dict, X: np.ndarray) -> np.ndarray:
    return np.full(len(np.asarray(X)), float(params["majority"]))


def random_scores(seed: int, X: np.ndarray) -> np.ndarray:
    """Uniform scores from a generator re-seeded on every call.

    Re-seeding makes scoring a pure function: the same rows always get
    the same scores, but the scores carry no signal.
    """
    return np.random.default_rng(seed).uniform(size=len(np.asarray(X)))
