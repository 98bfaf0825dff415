"""Feature scoring (mutual information, MultiSURF) and collective selection.

Both scorers consume a complete, imputed training view. MultiSURF uses
range-normalized Manhattan distances; an instance's "near" neighbors are
those closer than its mean pairwise distance minus half the standard
deviation of those distances. Collective selection keeps a feature when
either method scores it above zero.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

MI_MAX_BINS = 10
DEFAULT_INSTANCE_CAP = 2000
DEFAULT_MAX_FEATURES = 50


@dataclass
class FeatureScores:
    method: str  # "MI" | "MultiSURF"
    scores: np.ndarray
    instances_used: int
    seed: int | None = None


@dataclass
class SelectionResult:
    retained: list[int]  # feature indices, in original feature order
    dropped: list[int]
    cap_applied: bool


def _bin_equal_frequency(column: np.ndarray, max_bins: int = MI_MAX_BINS) -> np.ndarray:
    """Discretize into up to max_bins equal-frequency bins (duplicate quantile
    edges collapse, hence "up to")."""
    edges = np.quantile(column, np.linspace(0, 1, max_bins + 1)[1:-1])
    edges = np.unique(edges)
    return np.searchsorted(edges, column, side="right")


def _plugin_mi(x_codes: np.ndarray, y: np.ndarray) -> float:
    """Plug-in mutual information in nats from joint counts; empty cells add 0."""
    n = x_codes.size
    x_levels, x_inv = np.unique(x_codes, return_inverse=True)
    y_levels, y_inv = np.unique(y, return_inverse=True)
    joint = np.zeros((x_levels.size, y_levels.size))
    np.add.at(joint, (x_inv, y_inv), 1.0)
    joint /= n
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    mi = 0.0
    for i in range(x_levels.size):
        for j in range(y_levels.size):
            p = joint[i, j]
            if p > 0:
                mi += p * math.log(p / (px[i] * py[j]))
    return mi


def mutual_information(values: np.ndarray, labels: np.ndarray, kinds: np.ndarray) -> FeatureScores:
    """Per-feature plug-in MI with the class; quantitative features are
    equal-frequency binned first. Constant features score 0."""
    n, f = values.shape
    scores = np.zeros(f)
    for j in range(f):
        col = values[:, j]
        if np.all(col == col[0]):
            continue
        codes = col if kinds[j] == 1 else _bin_equal_frequency(col)
        scores[j] = _plugin_mi(codes, labels)
    return FeatureScores(method="MI", scores=scores, instances_used=n)


def multisurf(
    values: np.ndarray,
    labels: np.ndarray,
    kinds: np.ndarray,
    instance_cap: int = DEFAULT_INSTANCE_CAP,
    seed: int = 0,
) -> FeatureScores:
    """MultiSURF scores over a complete training view.

    Scores are accumulated over near-neighbor pairs (distance below the
    per-target mean minus half the per-target SD): hits subtract the
    per-feature diff, misses add it, and totals are divided by the number of
    scored target instances. Scoring uses a seeded uniform subsample when the
    view exceeds instance_cap.
    """
    n, f = values.shape
    if n < 3:
        raise ValueError("MultiSURF requires at least 3 instances")
    if n > instance_cap:
        rng = np.random.default_rng(seed)
        chosen = np.sort(rng.choice(n, size=instance_cap, replace=False))
        values = values[chosen]
        labels = labels[chosen]
        n = instance_cap

    # Per-feature diff matrices combine into range-normalized Manhattan distance.
    ranges = np.zeros(f)
    for j in range(f):
        if kinds[j] == 0:
            ranges[j] = values[:, j].max() - values[:, j].min()
    dist = np.zeros((n, n))
    for j in range(f):
        col = values[:, j]
        if kinds[j] == 1:
            dist += (col[:, None] != col[None, :]).astype(float)
        elif ranges[j] > 0:
            dist += np.abs(col[:, None] - col[None, :]) / ranges[j]
        # zero-range quantitative features contribute diff 0

    scores = np.zeros(f)
    same_class = labels[:, None] == labels[None, :]
    for i in range(n):
        row = np.delete(dist[i], i)
        threshold = row.mean() - row.std() / 2.0
        near = np.flatnonzero(dist[i] < threshold)
        near = near[near != i]
        if near.size == 0:
            continue
        sign = np.where(same_class[i, near], -1.0, 1.0)
        for j in range(f):
            col = values[:, j]
            if kinds[j] == 1:
                diffs = (col[near] != col[i]).astype(float)
            elif ranges[j] > 0:
                diffs = np.abs(col[near] - col[i]) / ranges[j]
            else:
                continue
            scores[j] += float(sign @ diffs)
    scores /= n
    return FeatureScores(method="MultiSURF", scores=scores, instances_used=n, seed=seed)


def _rank_normalized(scores: np.ndarray) -> np.ndarray:
    """Map scores to [0, 1] by rank, best = 1; ties broken by feature order."""
    f = scores.size
    order = sorted(range(f), key=lambda j: (-scores[j], j))
    ranks = np.empty(f)
    for pos, j in enumerate(order):
        ranks[j] = 1.0 - (pos / (f - 1) if f > 1 else 0.0)
    return ranks


def collective_select(
    mi: FeatureScores,
    ms: FeatureScores,
    max_features: int = DEFAULT_MAX_FEATURES,
) -> SelectionResult:
    """Union rule: keep features with MI > 0 or MultiSURF > 0, then cap.

    Above the cap, the top max_features by the max of the two per-method
    rank-normalized scores survive (ties -> higher MultiSURF score, then
    feature order). An empty union keeps the single best-ranked feature.
    """
    if mi.scores.shape != ms.scores.shape:
        raise ValueError("score vectors must cover the same features")
    f = mi.scores.size
    retained = [j for j in range(f) if mi.scores[j] > 0 or ms.scores[j] > 0]
    cap_applied = False
    combined = np.maximum(_rank_normalized(mi.scores), _rank_normalized(ms.scores))
    priority = sorted(range(f), key=lambda j: (-combined[j], -ms.scores[j], j))
    if not retained:
        logger.warning("no feature scored above 0 by either method; keeping the best-ranked one")
        retained = [priority[0]]
    elif len(retained) > max_features:
        keep = [j for j in priority if j in set(retained)][:max_features]
        retained = sorted(keep)
        cap_applied = True
    dropped = [j for j in range(f) if j not in set(retained)]
    return SelectionResult(retained=sorted(retained), dropped=dropped, cap_applied=cap_applied)


def write_scores_csv(
    path,
    feature_names: list[str],
    mi: FeatureScores,
    ms: FeatureScores,
    selection: SelectionResult,
) -> None:
    retained = set(selection.retained)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "mi_score", "multisurf_score", "retained"])
        for j, name in enumerate(feature_names):
            writer.writerow(
                [name, f"{mi.scores[j]:.10g}", f"{ms.scores[j]:.10g}",
                 str(j in retained).lower()]
            )
