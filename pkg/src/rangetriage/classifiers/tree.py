"""CART decision trees: Gini classification trees and second-order gain trees.

Trees are nested dicts so they serialize to JSON directly. Internal nodes
carry ``feature`` (column index), ``threshold`` (split at x <= threshold),
``left`` and ``right``. Classification leaves carry ``value`` (class-1
fraction); gain-tree leaves carry ``w`` (additive margin contribution).
"""

from __future__ import annotations

import math

import numpy as np


def _best_gini_split(
    X: np.ndarray,
    y: np.ndarray,
    feature_indices: np.ndarray,
    min_leaf: int,
) -> tuple[int, float] | None:
    """Lowest-weighted-Gini split over the given columns, or None.

    Ties resolve to the lowest feature index, then the lowest threshold:
    features are scanned in ascending order with a strict improvement
    test, and argmin keeps the first (lowest-threshold) candidate within
    a column. Thresholds are midpoints between adjacent distinct values,
    nudged down to the lower value whenever float rounding would let the
    upper value leak into the left child.
    """
    n = y.size
    total_pos = y.sum()
    sizes = np.arange(1, n)
    right_sizes = n - sizes
    best_impurity = math.inf
    best: tuple[int, float] | None = None
    for j in feature_indices:
        col = X[:, j]
        order = np.argsort(col, kind="stable")
        sv = col[order]
        boundary = sv[1:] > sv[:-1]
        if not boundary.any():
            continue
        left_pos = np.cumsum(y[order])[:-1]
        right_pos = total_pos - left_pos
        gini_left = 1.0 - (left_pos / sizes) ** 2 - ((sizes - left_pos) / sizes) ** 2
        gini_right = (
            1.0
            - (right_pos / right_sizes) ** 2
            - ((right_sizes - right_pos) / right_sizes) ** 2
        )
        weighted = (sizes * gini_left + right_sizes * gini_right) / n
        valid = boundary & (sizes >= min_leaf) & (right_sizes >= min_leaf)
        if not valid.any():
            continue
        weighted = np.where(valid, weighted, math.inf)
        i = int(np.argmin(weighted))
        if weighted[i] < best_impurity:
            threshold = 0.5 * (sv[i] + sv[i + 1])
            if threshold >= sv[i + 1]:
                threshold = sv[i]
            best_impurity = float(weighted[i])
            best = (int(j), float(threshold))
    return best


def build_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int,
    min_leaf: int = 1,
    rng: np.random.Generator | None = None,
    node_features: int | None = None,
) -> dict:
    """Grow a Gini classification tree on 0/1 labels.

    When ``rng`` and ``node_features`` are given, each node considers a
    fresh uniform sample of that many columns (random-forest style).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    d = X.shape[1]
    all_features = np.arange(d)

    def grow(idx: np.ndarray, depth: int) -> dict:
        sub_y = y[idx]
        value = float(sub_y.mean())
        if depth >= max_depth or value == 0.0 or value == 1.0:
            return {"value": value}
        if rng is not None and node_features is not None and node_features < d:
            feats = np.sort(rng.choice(d, size=node_features, replace=False))
        else:
            feats = all_features
        found = _best_gini_split(X[idx], sub_y, feats, min_leaf)
        if found is None:
            return {"value": value}
        j, threshold = found
        mask = X[idx, j] <= threshold
        return {
            "feature": j,
            "threshold": threshold,
            "value": value,
            "left": grow(idx[mask], depth + 1),
            "right": grow(idx[~mask], depth + 1),
        }

    return grow(np.arange(len(y)), 0)


def _best_gain_split(
    X: np.ndarray, g: np.ndarray, h: np.ndarray, lam: float
) -> tuple[int, float, float] | None:
    """Highest-gain split for a second-order boosting objective.

    Gain is the standard half-sum of squared-gradient-over-curvature
    terms relative to the unsplit node. Returns (feature, threshold,
    gain) or None when no split has positive gain.
    """
    n = g.size
    total_g = g.sum()
    total_h = h.sum()
    parent = total_g * total_g / (total_h + lam)
    best_gain = 1e-12
    best: tuple[int, float, float] | None = None
    for j in range(X.shape[1]):
        col = X[:, j]
        order = np.argsort(col, kind="stable")
        sv = col[order]
        boundary = sv[1:] > sv[:-1]
        if not boundary.any():
            continue
        gl = np.cumsum(g[order])[:-1]
        hl = np.cumsum(h[order])[:-1]
        gr = total_g - gl
        hr = total_h - hl
        gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent)
        gain = np.where(boundary, gain, -math.inf)
        i = int(np.argmax(gain))
        if gain[i] > best_gain:
            threshold = 0.5 * (sv[i] + sv[i + 1])
            if threshold >= sv[i + 1]:
                threshold = sv[i]
            best_gain = float(gain[i])
            best = (j, float(threshold), best_gain)
    return best


def build_gain_tree(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    max_depth: int,
    lam: float = 1.0,
) -> dict:
    """Grow a regression tree on gradient/curvature pairs.

    Leaves carry the Newton-step weight -G / (H + lam). Nodes split only
    while the gain stays positive.
    """
    X = np.asarray(X, dtype=float)

    def grow(idx: np.ndarray, depth: int) -> dict:
        sub_g = g[idx]
        sub_h = h[idx]
        weight = float(-sub_g.sum() / (sub_h.sum() + lam))
        if depth >= max_depth or idx.size < 2:
            return {"w": weight}
        found = _best_gain_split(X[idx], sub_g, sub_h, lam)
        if found is None:
            return {"w": weight}
        j, threshold, _ = found
        mask = X[idx, j] <= threshold
        return {
            "feature": j,
            "threshold": threshold,
            "left": grow(idx[mask], depth + 1),
            "right": grow(idx[~mask], depth + 1),
        }

    return grow(np.arange(g.size), 0)


def route_values(node: dict, X: np.ndarray, key: str = "value") -> np.ndarray:
    """Evaluate a tree: send every row to its leaf and read ``key``."""
    X = np.asarray(X, dtype=float)
    out = np.empty(len(X))
    stack = [(node, np.arange(len(X)))]
    while stack:
        current, idx = stack.pop()
        if idx.size == 0:
            continue
        if "feature" not in current:
            out[idx] = current[key]
            continue
        mask = X[idx, current["feature"]] <= current["threshold"]
        stack.append((current["left"], idx[mask]))
        stack.append((current["right"], idx[~mask]))
    return out


def tree_accuracy(node: dict, X: np.ndarray, y: np.ndarray) -> float:
    labels = route_values(node, X) >= 0.5
    return float((labels == (np.asarray(y) == 1)).mean())
