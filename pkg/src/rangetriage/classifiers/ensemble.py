"""Tree ensembles: bagged forests and gradient-boosted trees."""

from __future__ import annotations

import math

import numpy as np

from .linear import sigmoid
from .tree import build_gain_tree, build_tree, route_values


def fit_random_forest(
    X: np.ndarray, y: np.ndarray, n_trees: int, max_depth: int, seed: int
) -> dict:
    """Bootstrap-bagged Gini trees with sqrt(d) columns sampled per node.

    Each tree gets its own generator spawned from the seed, so the forest
    is reproducible and trees are independent of ordering.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    node_features = max(1, int(math.sqrt(d)))
    trees = []
    for child_seed in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(child_seed)
        sample = rng.integers(0, n, size=n)
        trees.append(
            build_tree(
                X[sample],
                y[sample],
                max_depth,
                min_leaf=1,
                rng=rng,
                node_features=node_features,
            )
        )
    return {"trees": trees}


def forest_scores(params: dict, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    total = np.zeros(len(X))
    for tree in params["trees"]:
        total += route_values(tree, X)
    return total / len(params["trees"])


def fit_boosted_trees(
    X: np.ndarray,
    y: np.ndarray,
    rounds: int,
    learning_rate: float,
    max_depth: int,
) -> dict:
    """Stagewise gain trees on logistic-loss gradients.

    Starts from the log-odds of the base rate; every round fits a tree to
    the current gradient/curvature pairs and adds its Newton-step leaf
    weights, shrunk by the learning rate.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    rate = float(y.mean())
    base = float(np.log(rate / (1.0 - rate)))
    margins = np.full(len(y), base)
    trees = []
    for _ in range(rounds):
        p = sigmoid(margins)
        gradient = p - y
        curvature = p * (1.0 - p)
        tree = build_gain_tree(X, gradient, curvature, max_depth)
        margins += learning_rate * route_values(tree, X, key="w")
        trees.append(tree)
    return {"base": base, "learning_rate": learning_rate, "trees": trees}


def boosted_margins(params: dict, X: np.ndarray, rounds: int | None = None) -> np.ndarray:
    """Additive margin after the first ``rounds`` trees (all by default)."""
    X = np.asarray(X, dtype=float)
    trees = params["trees"] if rounds is None else params["trees"][:rounds]
    margins = np.full(len(X), float(params["base"]))
    for tree in trees:
        margins += params["learning_rate"] * route_values(tree, X, key="w")
    return margins


def boosted_scores(params: dict, X: np.ndarray) -> np.ndarray:
    return sigmoid(boosted_margins(params, X))
