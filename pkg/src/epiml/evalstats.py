"""Metric suite, ROC/PRC curves, and cross-algorithm nonparametric statistics.

Threshold metrics define any 0/0 as 0 with a degeneracy flag so summaries
stay computable on degenerate test folds. Pairwise Mann-Whitney p-values are
reported raw, without multiplicity correction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from epiml.errors import DataError
from epiml.explore import _tie_term, chi2_sf, mann_whitney_u, midranks

METRIC_NAMES = (
    "accuracy",
    "balanced_accuracy",
    "f1",
    "recall",
    "specificity",
    "precision",
    "roc_auc",
    "prc_auc",
    "aps",
)


@dataclass
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def to_json(self) -> dict:
        return {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn}


@dataclass
class KruskalWallisResult:
    statistic: float
    p_value: float
    degenerate: bool = False


@dataclass
class EvaluationRecord:
    algorithm: str
    fold: int
    metrics: dict[str, float | None]
    counts: ConfusionCounts
    roc_points: np.ndarray  # (m, 2) of (FPR, TPR)
    prc_points: np.ndarray  # (m, 2) of (recall, precision)
    no_skill: float
    degenerate_metrics: list[str] = field(default_factory=list)


def _ratio(numer: float, denom: float, flags: list[str], name: str) -> float:
    if denom == 0:
        flags.append(name)
        return 0.0
    return numer / denom


def confusion_and_metrics(labels, predictions) -> tuple[ConfusionCounts, dict, list[str]]:
    """Confusion counts plus the threshold metric block; 0/0 metrics are 0
    with a flag (degenerate single-class folds do not raise)."""
    y = np.asarray(labels)
    p = np.asarray(predictions)
    if y.shape != p.shape:
        raise ValueError("labels and predictions must have equal length")
    counts = ConfusionCounts(
        tp=int(np.sum((y == 1) & (p == 1))),
        tn=int(np.sum((y == 0) & (p == 0))),
        fp=int(np.sum((y == 0) & (p == 1))),
        fn=int(np.sum((y == 1) & (p == 0))),
    )
    flags: list[str] = []
    precision = _ratio(counts.tp, counts.tp + counts.fp, flags, "precision")
    recall = _ratio(counts.tp, counts.tp + counts.fn, flags, "recall")
    specificity = _ratio(counts.tn, counts.tn + counts.fp, flags, "specificity")
    f1 = _ratio(2.0 * precision * recall, precision + recall, flags, "f1")
    metrics = {
        "accuracy": (counts.tp + counts.tn) / counts.total,
        "balanced_accuracy": (recall + specificity) / 2.0,
        "f1": f1,
        "recall": recall,
        "specificity": specificity,
        "precision": precision,
    }
    return counts, metrics, flags


def balanced_accuracy(labels, predictions) -> float:
    _, metrics, _ = confusion_and_metrics(labels, predictions)
    return metrics["balanced_accuracy"]


def _threshold_counts(labels: np.ndarray, scores: np.ndarray):
    """Cumulative TP/FP at each distinct score threshold, descending, ties grouped."""
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    distinct = np.flatnonzero(np.diff(sorted_scores)) if scores.size > 1 else np.array([], dtype=int)
    cut = np.append(distinct, scores.size - 1)
    tps = np.cumsum(sorted_labels == 1)[cut].astype(float)
    fps = np.cumsum(sorted_labels == 0)[cut].astype(float)
    return tps, fps


def roc_curve(labels, scores) -> tuple[np.ndarray, float | None]:
    """ROC points from (0,0) to (1,1) and the trapezoid AUC.

    AUC is None (absent) when only one class is present.
    """
    y = np.asarray(labels)
    s = np.asarray(scores, dtype=float)
    if not np.all(np.isfinite(s)):
        raise DataError("scores must be finite")
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    tps, fps = _threshold_counts(y, s)
    tpr = tps / n_pos if n_pos else np.zeros_like(tps)
    fpr = fps / n_neg if n_neg else np.zeros_like(fps)
    points = np.column_stack([np.concatenate([[0.0], fpr]), np.concatenate([[0.0], tpr])])
    if n_pos == 0 or n_neg == 0:
        return points, None
    auc = float(np.trapezoid(points[:, 1], points[:, 0]))
    return points, auc


def prc_curve(labels, scores) -> tuple[np.ndarray, float, float, float]:
    """PRC points, trapezoid PRC-AUC, average precision score, no-skill line."""
    y = np.asarray(labels)
    s = np.asarray(scores, dtype=float)
    n_pos = int(np.sum(y == 1))
    if n_pos == 0:
        raise DataError("PRC requires at least one positive label")
    tps, fps = _threshold_counts(y, s)
    recall = tps / n_pos
    precision = tps / (tps + fps)
    points = np.column_stack(
        [np.concatenate([[0.0], recall]), np.concatenate([[1.0], precision])]
    )
    prc_auc = float(np.trapezoid(points[:, 1], points[:, 0]))
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    aps = float(np.sum((recall - prev_recall) * precision))
    no_skill = n_pos / y.size
    return points, prc_auc, aps, no_skill


def kruskal_wallis(groups) -> KruskalWallisResult:
    """Kruskal-Wallis H with midranks and tie correction; chi-square tail p."""
    arrays = [np.asarray(g, dtype=float) for g in groups]
    if len(arrays) < 2:
        raise ValueError("need at least two groups")
    if any(a.size == 0 for a in arrays):
        raise ValueError("all groups must be non-empty")
    pooled = np.concatenate(arrays)
    n = pooled.size
    ranks = midranks(pooled)
    h = 0.0
    offset = 0
    for a in arrays:
        r = ranks[offset : offset + a.size].sum()
        h += r * r / a.size
        offset += a.size
    h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0)
    correction = 1.0 - _tie_term(pooled) / (n**3 - n)
    if correction <= 0:
        return KruskalWallisResult(statistic=0.0, p_value=1.0, degenerate=True)
    h /= correction
    return KruskalWallisResult(statistic=h, p_value=chi2_sf(h, len(arrays) - 1))


def evaluate_scores(algorithm: str, fold: int, labels, scores) -> EvaluationRecord:
    """Full EvaluationRecord from class-1 scores (threshold 0.5, ties to 1)."""
    y = np.asarray(labels)
    s = np.asarray(scores, dtype=float)
    predictions = (s >= 0.5).astype(np.int8)
    counts, metrics, flags = confusion_and_metrics(y, predictions)
    roc_points, roc_auc = roc_curve(y, s)
    metrics["roc_auc"] = roc_auc
    if roc_auc is None:
        flags.append("roc_auc")
    if np.sum(y == 1) > 0:
        prc_points, prc_auc, aps, no_skill = prc_curve(y, s)
        metrics["prc_auc"] = prc_auc
        metrics["aps"] = aps
    else:
        prc_points = np.zeros((0, 2))
        metrics["prc_auc"] = None
        metrics["aps"] = None
        no_skill = 0.0
        flags.extend(["prc_auc", "aps"])
    return EvaluationRecord(
        algorithm=algorithm,
        fold=fold,
        metrics=metrics,
        counts=counts,
        roc_points=roc_points,
        prc_points=prc_points,
        no_skill=no_skill,
        degenerate_metrics=flags,
    )


@dataclass
class PairwiseTest:
    pair: tuple[str, str]
    u_statistic: float
    p_value: float


@dataclass
class MetricComparison:
    metric: str
    kw_statistic: float
    kw_p: float
    pairwise: list[PairwiseTest]


def metric_vectors(records: list[EvaluationRecord], metric: str) -> dict[str, list[float]]:
    """Per-algorithm fold-ordered metric values (None entries skipped)."""
    out: dict[str, list[float]] = {}
    for rec in sorted(records, key=lambda r: (r.algorithm, r.fold)):
        value = rec.metrics.get(metric)
        if value is not None:
            out.setdefault(rec.algorithm, []).append(float(value))
    return out


def compare_algorithms(records: list[EvaluationRecord], alpha: float = 0.05) -> list[MetricComparison]:
    """Per metric: Kruskal-Wallis across algorithms; pairwise Mann-Whitney
    (lexicographic pair order, raw p-values) when the KW test is significant."""
    comparisons = []
    for metric in METRIC_NAMES:
        vectors = metric_vectors(records, metric)
        if len(vectors) < 2:
            continue
        names = sorted(vectors)
        kw = kruskal_wallis([vectors[name] for name in names])
        pairwise = []
        if kw.p_value < alpha:
            for i in range(len(names)):
                for j in range(i + 1, len(names)):
                    mw = mann_whitney_u(vectors[names[i]], vectors[names[j]])
                    pairwise.append(
                        PairwiseTest(
                            pair=(names[i], names[j]),
                            u_statistic=mw.u_a,
                            p_value=mw.p_value,
                        )
                    )
        comparisons.append(
            MetricComparison(
                metric=metric,
                kw_statistic=kw.statistic,
                kw_p=kw.p_value,
                pairwise=pairwise,
            )
        )
    return comparisons


def summarize_metrics(records: list[EvaluationRecord]) -> list[tuple[str, str, float, float]]:
    """(algorithm, metric, mean, sample std) rows in deterministic order."""
    rows = []
    algorithms = sorted({r.algorithm for r in records})
    for algorithm in algorithms:
        for metric in METRIC_NAMES:
            values = [
                float(r.metrics[metric])
                for r in records
                if r.algorithm == algorithm and r.metrics.get(metric) is not None
            ]
            if not values:
                continue
            arr = np.array(values)
            std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
            rows.append((algorithm, metric, float(arr.mean()), std))
    return rows


def write_metrics_summary_csv(path, records: list[EvaluationRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["algorithm", "metric", "mean", "std"])
        for algorithm, metric, mean, std in summarize_metrics(records):
            writer.writerow([algorithm, metric, f"{mean:.10g}", f"{std:.10g}"])


def write_statistics_csv(path, comparisons: list[MetricComparison]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "kw_H", "kw_p", "pair", "mw_U", "mw_p"])
        for comp in comparisons:
            writer.writerow(
                [comp.metric, f"{comp.kw_statistic:.10g}", f"{comp.kw_p:.10g}", "", "", ""]
            )
            for test in comp.pairwise:
                writer.writerow(
                    [comp.metric, "", "", f"{test.pair[0]} vs {test.pair[1]}",
                     f"{test.u_statistic:.10g}", f"{test.p_value:.10g}"]
                )


def write_records_csv(path, records: list[EvaluationRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["algorithm", "fold", *METRIC_NAMES, "tp", "tn", "fp", "fn", "degenerate"]
        )
        for r in sorted(records, key=lambda r: (r.algorithm, r.fold)):
            metric_cells = [
                "" if r.metrics.get(m) is None else f"{r.metrics[m]:.10g}"
                for m in METRIC_NAMES
            ]
            writer.writerow(
                [r.algorithm, r.fold, *metric_cells,
                 r.counts.tp, r.counts.tn, r.counts.fp, r.counts.fn,
                 ";".join(r.degenerate_metrics)]
            )
