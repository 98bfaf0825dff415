"""CART decision tree: binary splits, Gini impurity, exhaustive split scan.

Quantitative features split at midpoints between consecutive distinct sorted
values (x <= threshold goes left); categorical features split one-vs-rest on
each observed code (x == code goes left). Split ties resolve to the lowest
feature index, then the lowest threshold. Zero-gain splits are permitted so
pure interactions (e.g. XOR) remain learnable. The builder and traversal are
numba-compiled; the same kernels back the random forest with per-node feature
subsampling and bootstrap resampling.
"""

from __future__ import annotations

import numpy as np
from numba import njit

TIE_EPS = 1e-12


@njit(cache=True)
def _gini(pos: float, n: float) -> float:
    if n <= 0.0:
        return 0.0
    p = pos / n
    return 2.0 * p * (1.0 - p)


@njit(cache=True)
def _build_tree_kernel(
    X, y, kinds, max_depth, min_split, min_leaf, m_features, seed, bootstrap,
    node_feature, node_threshold, node_is_cat, node_left, node_right, node_value,
    importance,
):
    """Iterative depth-first CART build into preallocated node arrays.

    Returns the number of nodes written. Uses numba's RNG (seeded here) for
    bootstrap resampling and per-node feature subsampling.
    """
    np.random.seed(seed)
    n_total = X.shape[0]
    n_features = X.shape[1]

    if bootstrap == 1:
        idx = np.empty(n_total, dtype=np.int64)
        for i in range(n_total):
            idx[i] = np.random.randint(0, n_total)
    else:
        idx = np.arange(n_total)

    feats_ws = np.arange(n_features)
    scratch = np.empty(n_total, dtype=np.int64)

    # Stack of (node_id, start, end, depth) over the idx workspace.
    max_nodes = node_feature.shape[0]
    stack = np.empty((max_nodes, 4), dtype=np.int64)
    node_count = 1
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n_total
    stack[0, 3] = 0
    top = 1

    while top > 0:
        top -= 1
        node_id = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        n = end - start

        total_pos = 0.0
        for p in range(start, end):
            total_pos += y[idx[p]]
        node_value[node_id] = total_pos / n
        node_feature[node_id] = -1

        if (
            total_pos == 0.0
            or total_pos == n
            or depth >= max_depth
            or n < min_split
            or n < 2 * min_leaf
        ):
            continue

        # Candidate features: all, or a uniform subsample scanned in
        # ascending index order.
        if m_features < n_features:
            for t in range(m_features):
                r = t + np.random.randint(0, n_features - t)
                tmp = feats_ws[t]
                feats_ws[t] = feats_ws[r]
                feats_ws[r] = tmp
            selected = np.sort(feats_ws[:m_features].copy())
        else:
            selected = feats_ws

        best_feat = -1
        best_thr = 0.0
        best_cat = 0
        best_score = 1e300
        n_candidates = m_features if m_features < n_features else n_features

        vals = np.empty(n)
        labs = np.empty(n)
        for fi in range(n_candidates):
            f = selected[fi]
            for p in range(n):
                vals[p] = X[idx[start + p], f]
            order = np.argsort(vals)
            if kinds[f] == 0:
                pos = 0.0
                for s in range(1, n):
                    pos += y[idx[start + order[s - 1]]]
                    if vals[order[s]] == vals[order[s - 1]]:
                        continue
                    if s < min_leaf or (n - s) < min_leaf:
                        continue
                    score = (
                        s * _gini(pos, s) + (n - s) * _gini(total_pos - pos, n - s)
                    ) / n
                    if score < best_score - TIE_EPS:
                        best_score = score
                        best_feat = f
                        best_cat = 0
                        best_thr = (vals[order[s]] + vals[order[s - 1]]) / 2.0
            else:
                i0 = 0
                while i0 < n:
                    v = vals[order[i0]]
                    i1 = i0
                    pos_g = 0.0
                    while i1 < n and vals[order[i1]] == v:
                        pos_g += y[idx[start + order[i1]]]
                        i1 += 1
                    cnt = i1 - i0
                    if cnt >= min_leaf and (n - cnt) >= min_leaf and cnt < n:
                        score = (
                            cnt * _gini(pos_g, cnt)
                            + (n - cnt) * _gini(total_pos - pos_g, n - cnt)
                        ) / n
                        if score < best_score - TIE_EPS:
                            best_score = score
                            best_feat = f
                            best_cat = 1
                            best_thr = v
                    i0 = i1

        if best_feat < 0:
            continue

        importance[best_feat] += n * (_gini(total_pos, n) - best_score)

        # Stable partition: left block then right block.
        n_left = 0
        for p in range(start, end):
            v = X[idx[p], best_feat]
            go_left = (v == best_thr) if best_cat == 1 else (v <= best_thr)
            if go_left:
                scratch[n_left] = idx[p]
                n_left += 1
        n_right = 0
        for p in range(start, end):
            v = X[idx[p], best_feat]
            go_left = (v == best_thr) if best_cat == 1 else (v <= best_thr)
            if not go_left:
                scratch[n_left + n_right] = idx[p]
                n_right += 1
        for p in range(n):
            idx[start + p] = scratch[p]

        left_id = node_count
        right_id = node_count + 1
        node_count += 2
        node_feature[node_id] = best_feat
        node_threshold[node_id] = best_thr
        node_is_cat[node_id] = best_cat
        node_left[node_id] = left_id
        node_right[node_id] = right_id

        stack[top, 0] = right_id
        stack[top, 1] = start + n_left
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = left_id
        stack[top, 1] = start
        stack[top, 2] = start + n_left
        stack[top, 3] = depth + 1
        top += 1

    return node_count


@njit(cache=True)
def _apply_tree_kernel(node_feature, node_threshold, node_is_cat, node_left,
                       node_right, node_value, X):
    n = X.shape[0]
    out = np.empty(n)
    for i in range(n):
        node = 0
        while node_feature[node] >= 0:
            f = node_feature[node]
            v = X[i, f]
            if node_is_cat[node] == 1:
                node = node_left[node] if v == node_threshold[node] else node_right[node]
            else:
                node = node_left[node] if v <= node_threshold[node] else node_right[node]
        out[i] = node_value[node]
    return out


def build_tree(
    X: np.ndarray,
    y: np.ndarray,
    kinds: np.ndarray,
    max_depth: int,
    min_samples_split: int,
    min_samples_leaf: int,
    m_features: int,
    seed: int,
    bootstrap: bool,
) -> dict:
    """Fit one tree and return its node arrays plus raw impurity decreases."""
    n = X.shape[0]
    cap = 2 * n + 1
    node_feature = np.full(cap, -1, dtype=np.int32)
    node_threshold = np.zeros(cap)
    node_is_cat = np.zeros(cap, dtype=np.uint8)
    node_left = np.zeros(cap, dtype=np.int32)
    node_right = np.zeros(cap, dtype=np.int32)
    node_value = np.zeros(cap)
    importance = np.zeros(X.shape[1])
    count = _build_tree_kernel(
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.float64),
        np.ascontiguousarray(kinds, dtype=np.uint8),
        max_depth,
        min_samples_split,
        min_samples_leaf,
        m_features,
        seed & 0x7FFFFFFF,
        1 if bootstrap else 0,
        node_feature, node_threshold, node_is_cat, node_left, node_right, node_value,
        importance,
    )
    return {
        "feature": node_feature[:count].copy(),
        "threshold": node_threshold[:count].copy(),
        "is_cat": node_is_cat[:count].copy(),
        "left": node_left[:count].copy(),
        "right": node_right[:count].copy(),
        "value": node_value[:count].copy(),
        "raw_importance": importance,
    }


def apply_tree(nodes: dict, X: np.ndarray) -> np.ndarray:
    """Leaf class-1 proportion for each instance."""
    return _apply_tree_kernel(
        nodes["feature"], nodes["threshold"], nodes["is_cat"],
        nodes["left"], nodes["right"], nodes["value"],
        np.ascontiguousarray(X, dtype=np.float64),
    )


def fit(hyperparameters: dict, X: np.ndarray, y: np.ndarray, kinds, seed: int):
    nodes = build_tree(
        X, y, np.asarray(kinds, dtype=np.uint8),
        max_depth=int(hyperparameters["max_depth"]),
        min_samples_split=int(hyperparameters["min_samples_split"]),
        min_samples_leaf=int(hyperparameters["min_samples_leaf"]),
        m_features=X.shape[1],
        seed=seed,
        bootstrap=False,
    )
    raw = nodes.pop("raw_importance")
    total = raw.sum()
    importance = raw / total if total > 0 else raw
    payload = {"nodes": nodes}
    return payload, importance


def predict_proba(payload: dict, X: np.ndarray) -> np.ndarray:
    return apply_tree(payload["nodes"], X)


def nodes_to_json(nodes: dict) -> dict:
    return {
        "feature": nodes["feature"].tolist(),
        "threshold": nodes["threshold"].tolist(),
        "is_cat": nodes["is_cat"].tolist(),
        "left": nodes["left"].tolist(),
        "right": nodes["right"].tolist(),
        "value": nodes["value"].tolist(),
    }


def nodes_from_json(obj: dict) -> dict:
    return {
        "feature": np.array(obj["feature"], dtype=np.int32),
        "threshold": np.array(obj["threshold"], dtype=float),
        "is_cat": np.array(obj["is_cat"], dtype=np.uint8),
        "left": np.array(obj["left"], dtype=np.int32),
        "right": np.array(obj["right"], dtype=np.int32),
        "value": np.array(obj["value"], dtype=float),
    }


def payload_from_json(payload: dict) -> dict:
    return {"nodes": nodes_from_json(payload["nodes"])}
