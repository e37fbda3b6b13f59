"""k-nearest-neighbour voting with Euclidean distances."""

from __future__ import annotations

import numpy as np


def knn_scores(
    train_X: np.ndarray, train_y: np.ndarray, k: int, X: np.ndarray
) -> np.ndarray:
    """Fraction of positive labels among the k nearest training rows.

    Distance ties resolve to the lower training-row index (stable sort),
    so scoring is deterministic even on duplicated points.
    """
    train_X = np.asarray(train_X, dtype=float)
    train_y = np.asarray(train_y, dtype=float)
    X = np.asarray(X, dtype=float)
    k = min(k, len(train_y))
    squared = (
        (X * X).sum(axis=1)[:, None]
        + (train_X * train_X).sum(axis=1)[None, :]
        - 2.0 * X @ train_X.T
    )
    nearest = np.argsort(squared, axis=1, kind="stable")[:, :k]
    return train_y[nearest].mean(axis=1)
