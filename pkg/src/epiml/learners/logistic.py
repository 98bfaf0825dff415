"""L2-regularized logistic regression via full-batch gradient descent.

Backtracking (Armijo) line search; stops when the gradient max-norm falls
below 1e-6 or after 5000 iterations. The penalty applies to the weights only,
not the intercept.
"""

from __future__ import annotations

import numpy as np

GRAD_TOL = 1e-6
MAX_ITER = 5000
ARMIJO_C = 1e-4
BACKTRACK_FACTOR = 0.5
MAX_BACKTRACKS = 60


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _loss(X, y, w, b, penalty):
    z = X @ w + b
    # -[y log p + (1-y) log(1-p)] = softplus(z) - y z
    nll = np.mean(np.logaddexp(0.0, z) - y * z)
    return nll + 0.5 * penalty * float(w @ w)


def fit(hyperparameters: dict, X: np.ndarray, y: np.ndarray, kinds, seed: int):
    penalty = float(hyperparameters["l2_penalty"])
    n, f = X.shape
    y_f = y.astype(float)
    w = np.zeros(f)
    b = 0.0
    step = 1.0
    loss = _loss(X, y_f, w, b, penalty)
    iterations = 0
    converged = False
    for iterations in range(1, MAX_ITER + 1):
        p = _sigmoid(X @ w + b)
        resid = (p - y_f) / n
        grad_w = X.T @ resid + penalty * w
        grad_b = float(resid.sum())
        grad_max = max(float(np.max(np.abs(grad_w))) if f else 0.0, abs(grad_b))
        if grad_max < GRAD_TOL:
            converged = True
            break
        grad_sq = float(grad_w @ grad_w) + grad_b * grad_b
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            w_new = w - step * grad_w
            b_new = b - step * grad_b
            loss_new = _loss(X, y_f, w_new, b_new, penalty)
            if loss_new <= loss - ARMIJO_C * step * grad_sq:
                accepted = True
                break
            step *= BACKTRACK_FACTOR
        if not accepted:
            converged = True  # step underflow: no further numeric progress
            break
        w, b, loss = w_new, b_new, loss_new
        step = min(step * 2.0, 1e6)
    payload = {
        "weights": w,
        "intercept": b,
        "iterations": iterations,
        "converged": converged,
    }
    return payload, None


def predict_proba(payload: dict, X: np.ndarray) -> np.ndarray:
    return _sigmoid(X @ payload["weights"] + payload["intercept"])


def payload_from_json(payload: dict) -> dict:
    return {
        "weights": np.array(payload["weights"], dtype=float),
        "intercept": float(payload["intercept"]),
        "iterations": int(payload["iterations"]),
        "converged": bool(payload["converged"]),
    }
