"""Random forest: seeded bootstrap bagging over CART trees with per-split
uniform feature subsampling. The forest score is the mean of the trees' leaf
class-1 proportions; per-tree seeds derive as seed XOR tree index."""

from __future__ import annotations

import numpy as np

from epiml.learners import tree


def _m_features(fraction: float, n_features: int) -> int:
    return max(1, min(n_features, int(round(fraction * n_features))))


def fit(hyperparameters: dict, X: np.ndarray, y: np.ndarray, kinds, seed: int):
    n_estimators = int(hyperparameters["n_estimators"])
    kinds_arr = np.asarray(kinds, dtype=np.uint8)
    m = _m_features(float(hyperparameters["max_features_fraction"]), X.shape[1])
    trees = []
    raw_importance = np.zeros(X.shape[1])
    for t in range(n_estimators):
        nodes = tree.build_tree(
            X, y, kinds_arr,
            max_depth=int(hyperparameters["max_depth"]),
            min_samples_split=2,
            min_samples_leaf=int(hyperparameters["min_samples_leaf"]),
            m_features=m,
            seed=seed ^ t,
            bootstrap=True,
        )
        raw_importance += nodes.pop("raw_importance")
        trees.append(nodes)
    total = raw_importance.sum()
    importance = raw_importance / total if total > 0 else raw_importance
    payload = {"trees": trees, "m_features": m}
    return payload, importance


def predict_proba(payload: dict, X: np.ndarray) -> np.ndarray:
    Xc = np.ascontiguousarray(X, dtype=np.float64)
    scores = np.zeros(X.shape[0])
    for nodes in payload["trees"]:
        scores += tree.apply_tree(nodes, Xc)
    return scores / len(payload["trees"])


def payload_from_json(payload: dict) -> dict:
    return {
        "trees": [tree.nodes_from_json(nodes) for nodes in payload["trees"]],
        "m_features": int(payload["m_features"]),
    }
