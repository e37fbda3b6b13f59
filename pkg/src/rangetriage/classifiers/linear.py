"""Linear models: logistic regression (L2 and L1) and a hinge-loss SVM.

Parameter vectors are laid out as ``theta = [w_0 .. w_{d-1}, b]`` with the
intercept last and never penalized.
"""

from __future__ import annotations

import numpy as np


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def logistic_objective(theta: np.ndarray, X: np.ndarray, y: np.ndarray, C: float) -> float:
    """Mean negative log-likelihood plus ||w||^2 / (2 C n)."""
    w, b = theta[:-1], theta[-1]
    z = X @ w + b
    nll = float(np.mean(np.logaddexp(0.0, z) - y * z))
    return nll + float(w @ w) / (2.0 * C * len(y))


def logistic_gradient(theta: np.ndarray, X: np.ndarray, y: np.ndarray, C: float) -> np.ndarray:
    w, b = theta[:-1], theta[-1]
    residual = (sigmoid(X @ w + b) - y) / len(y)
    grad_w = X.T @ residual + w / (C * len(y))
    return np.concatenate([grad_w, [residual.sum()]])


def fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    C: float,
    tol: float = 1e-7,
    max_iter: int = 2000,
) -> np.ndarray:
    """Gradient descent with backtracking (Armijo) line search.

    Stops when the gradient infinity-norm drops below ``tol``. The step
    doubles after every accepted iteration so the search does not crawl
    once the curvature is known.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    theta = np.zeros(X.shape[1] + 1)
    value = logistic_objective(theta, X, y, C)
    step = 1.0
    for _ in range(max_iter):
        grad = logistic_gradient(theta, X, y, C)
        if np.abs(grad).max() < tol:
            break
        sq_norm = float(grad @ grad)
        while step > 1e-14:
            candidate = theta - step * grad
            candidate_value = logistic_objective(candidate, X, y, C)
            if candidate_value <= value - 1e-4 * step * sq_norm:
                break
            step *= 0.5
        theta = candidate
        value = candidate_value
        step *= 2.0
    return theta


def _soft_threshold(v: np.ndarray, amount: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - amount, 0.0)


def fit_l1_logistic(
    X: np.ndarray,
    y: np.ndarray,
    penalty: float,
    max_iter: int = 1000,
    tol: float = 1e-9,
) -> np.ndarray:
    """Minimize mean NLL + penalty * ||w||_1 by FISTA (bias unpenalized)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    augmented = np.hstack([X, np.ones((n, 1))])
    lipschitz = 0.25 * float(np.linalg.eigvalsh(augmented.T @ augmented / n)[-1])
    step = 1.0 / max(lipschitz, 1e-12)

    theta = np.zeros(d + 1)
    lookahead = theta.copy()
    momentum = 1.0
    for _ in range(max_iter):
        p = sigmoid(augmented @ lookahead)
        grad = augmented.T @ (p - y) / n
        candidate = lookahead - step * grad
        candidate[:d] = _soft_threshold(candidate[:d], step * penalty)
        momentum_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * momentum * momentum))
        lookahead = candidate + ((momentum - 1.0) / momentum_next) * (candidate - theta)
        done = np.abs(candidate - theta).max() < tol
        theta = candidate
        momentum = momentum_next
        if done:
            break
    return theta


def fit_linear_svm(
    X: np.ndarray,
    y: np.ndarray,
    C: float,
    iterations: int = 4000,
) -> np.ndarray:
    """Subgradient descent on the regularized hinge loss.

    Objective: lam/2 ||theta||^2 + mean hinge, with lam = 1/(C n) and the
    intercept folded into theta via an appended constant column (so the
    projection-onto-ball step of the classic schedule applies cleanly).
    Returns the tail average of the iterates, which is far more stable
    than the last iterate under the 1/(lam t) step sizes.
    """
    X = np.asarray(X, dtype=float)
    signs = 2.0 * np.asarray(y, dtype=float) - 1.0
    n, d = X.shape
    augmented = np.hstack([X, np.ones((n, 1))])
    lam = 1.0 / (C * n)
    radius = 1.0 / np.sqrt(lam)

    theta = np.zeros(d + 1)
    tail_sum = np.zeros(d + 1)
    tail_from = iterations // 2
    for t in range(1, iterations + 1):
        eta = 1.0 / (lam * t)
        margins = signs * (augmented @ theta)
        violators = margins < 1.0
        grad = lam * theta - (signs[violators, None] * augmented[violators]).sum(axis=0) / n
        theta = theta - eta * grad
        norm = float(np.linalg.norm(theta))
        if norm > radius:
            theta *= radius / norm
        if t > tail_from:
            tail_sum += theta
    return tail_sum / (iterations - tail_from)


def linear_scores(theta: np.ndarray, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return sigmoid(X @ theta[:-1] + theta[-1])
