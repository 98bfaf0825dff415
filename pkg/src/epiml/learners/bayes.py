"""Naive Bayes: Laplace-smoothed categorical likelihoods (alpha = 1) and
per-class Gaussians with a 1e-9 variance floor for quantitative features.
No tunable hyperparameters."""

from __future__ import annotations

import math

import numpy as np

LAPLACE_ALPHA = 1.0
VARIANCE_FLOOR = 1e-9


def fit(hyperparameters: dict, X: np.ndarray, y: np.ndarray, kinds, seed: int):
    n, f = X.shape
    counts = np.array([np.sum(y == 0), np.sum(y == 1)], dtype=float)
    features = []
    for j in range(f):
        col = X[:, j]
        if kinds[j] == 1:
            levels = np.unique(col)
            log_lik = np.zeros((2, levels.size))
            for c in (0, 1):
                sel = col[y == c]
                denom = counts[c] + LAPLACE_ALPHA * levels.size
                for li, level in enumerate(levels):
                    log_lik[c, li] = math.log(
                        (np.sum(sel == level) + LAPLACE_ALPHA) / denom
                    )
            features.append({
                "kind": "categorical",
                "levels": levels,
                "log_lik": log_lik,
                # unseen level at predict time gets the pure-smoothing mass
                "log_unseen": np.array([
                    math.log(LAPLACE_ALPHA / (counts[0] + LAPLACE_ALPHA * levels.size)),
                    math.log(LAPLACE_ALPHA / (counts[1] + LAPLACE_ALPHA * levels.size)),
                ]),
            })
        else:
            means = np.zeros(2)
            variances = np.zeros(2)
            for c in (0, 1):
                sel = col[y == c]
                means[c] = sel.mean()
                variances[c] = max(float(sel.var()), VARIANCE_FLOOR)
            features.append({"kind": "gaussian", "means": means, "variances": variances})
    payload = {
        "log_priors": np.log(counts / n),
        "features": features,
    }
    return payload, None


def predict_proba(payload: dict, X: np.ndarray) -> np.ndarray:
    n = X.shape[0]
    log_post = np.tile(payload["log_priors"], (n, 1))
    for j, feat in enumerate(payload["features"]):
        col = X[:, j]
        if feat["kind"] == "categorical":
            idx = np.searchsorted(feat["levels"], col)
            idx = np.clip(idx, 0, feat["levels"].size - 1)
            seen = feat["levels"][idx] == col
            for c in (0, 1):
                contrib = np.where(
                    seen, feat["log_lik"][c][idx], feat["log_unseen"][c]
                )
                log_post[:, c] += contrib
        else:
            for c in (0, 1):
                var = feat["variances"][c]
                log_post[:, c] += -0.5 * (
                    math.log(2.0 * math.pi * var) + (col - feat["means"][c]) ** 2 / var
                )
    shifted = log_post - log_post.max(axis=1, keepdims=True)
    likes = np.exp(shifted)
    return likes[:, 1] / likes.sum(axis=1)


def payload_from_json(payload: dict) -> dict:
    features = []
    for feat in payload["features"]:
        if feat["kind"] == "categorical":
            features.append({
                "kind": "categorical",
                "levels": np.array(feat["levels"], dtype=float),
                "log_lik": np.array(feat["log_lik"], dtype=float),
                "log_unseen": np.array(feat["log_unseen"], dtype=float),
            })
        else:
            features.append({
                "kind": "gaussian",
                "means": np.array(feat["means"], dtype=float),
                "variances": np.array(feat["variances"], dtype=float),
            })
    return {
        "log_priors": np.array(payload["log_priors"], dtype=float),
        "features": features,
    }
