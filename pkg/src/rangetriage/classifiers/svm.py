"""Kernel SVM trained by sequential minimal optimization.

The dual is solved pair by pair: sweep the training set, and for every
multiplier that violates its KKT condition pick the partner with the
largest error gap. All choices are by argmax with first-occurrence tie
breaking, so a fit is a pure function of its inputs.
"""

from __future__ import annotations

import numpy as np

KKT_TOL = 1e-3
MIN_STEP = 1e-8
MAX_SWEEPS = 200


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    squared = (
        (A * A).sum(axis=1)[:, None]
        + (B * B).sum(axis=1)[None, :]
        - 2.0 * A @ B.T
    )
    return np.exp(-gamma * np.maximum(squared, 0.0))


def resolve_gamma(gamma: float | str, X: np.ndarray) -> float:
    """Numeric gamma, with "scale" meaning 1 / (d * variance of X)."""
    if gamma == "scale":
        X = np.asarray(X, dtype=float)
        variance = float(X.var())
        if variance <= 0.0:
            return 1.0
        return 1.0 / (X.shape[1] * variance)
    return float(gamma)


def fit_svm_rbf(X: np.ndarray, y: np.ndarray, C: float, gamma: float | str) -> dict:
    X = np.asarray(X, dtype=float)
    signs = 2.0 * np.asarray(y, dtype=float) - 1.0
    n = len(signs)
    gamma_value = resolve_gamma(gamma, X)
    K = rbf_kernel(X, X, gamma_value)

    alpha = np.zeros(n)
    b = 0.0
    # errors[i] = f(x_i) - y_i, kept incrementally current
    errors = -signs.copy()

    def take_step(i: int, j: int) -> bool:
        nonlocal b, errors
        if i == j:
            return False
        s = signs[i] * signs[j]
        if s > 0:
            low = max(0.0, alpha[i] + alpha[j] - C)
            high = min(C, alpha[i] + alpha[j])
        else:
            low = max(0.0, alpha[j] - alpha[i])
            high = min(C, C + alpha[j] - alpha[i])
        if high - low < MIN_STEP:
            return False
        eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
        if eta >= 0.0:
            return False
        new_j = alpha[j] - signs[j] * (errors[i] - errors[j]) / eta
        new_j = min(max(new_j, low), high)
        delta_j = new_j - alpha[j]
        if abs(delta_j) < MIN_STEP * (new_j + alpha[j] + MIN_STEP):
            return False
        delta_i = -s * delta_j
        new_i = alpha[i] + delta_i

        b1 = b - errors[i] - signs[i] * delta_i * K[i, i] - signs[j] * delta_j * K[i, j]
        b2 = b - errors[j] - signs[i] * delta_i * K[i, j] - signs[j] * delta_j * K[j, j]
        if 0.0 < new_i < C:
            new_b = b1
        elif 0.0 < new_j < C:
            new_b = b2
        else:
            new_b = 0.5 * (b1 + b2)

        errors += (
            signs[i] * delta_i * K[:, i]
            + signs[j] * delta_j * K[:, j]
            + (new_b - b)
        )
        alpha[i] = new_i
        alpha[j] = new_j
        b = new_b
        return True

    for _ in range(MAX_SWEEPS):
        changed = 0
        for i in range(n):
            r = errors[i] * signs[i]
            if (r < -KKT_TOL and alpha[i] < C) or (r > KKT_TOL and alpha[i] > 0.0):
                j = int(np.argmax(np.abs(errors[i] - errors)))
                if take_step(i, j):
                    changed += 1
                    continue
                for j in range(n):
                    if take_step(i, j):
                        changed += 1
                        break
        if changed == 0:
            break

    support = alpha > 1e-12
    return {
        "gamma": gamma_value,
        "bias": float(b),
        "dual_coef": (alpha[support] * signs[support]).tolist(),
        "support_X": X[support].tolist(),
    }


def svm_rbf_decision(params: dict, X: np.ndarray) -> np.ndarray:
    support_X = np.asarray(params["support_X"], dtype=float)
    dual = np.asarray(params["dual_coef"], dtype=float)
    if len(dual) == 0:
        return np.full(len(np.asarray(X)), params["bias"])
    K = rbf_kernel(np.asarray(X, dtype=float), support_X, params["gamma"])
    return K @ dual + params["bias"]
