"""Exploratory analysis: counts, missingness, correlation, univariate tests.

Categorical features are tested against the outcome with a Pearson chi-square
test, quantitative features with a two-sided Mann-Whitney U test (normal
approximation, midranks, tie-corrected variance, continuity correction).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from epiml.data import Dataset, FeatureKind
from epiml.special import chi2_sf, normal_sf


@dataclass
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float
    degenerate: bool = False


@dataclass
class MannWhitneyResult:
    u_a: float  # rank-sum statistic for the first group
    u_min: float
    p_value: float
    degenerate: bool = False


@dataclass
class UnivariateResult:
    feature: str
    test: str  # "ChiSquare" | "MannWhitney"
    statistic: float
    p_value: float
    significant_bonferroni: bool
    degenerate: bool = False


def midranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties assigned the mean of the ranks they span."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _tie_term(pooled: np.ndarray) -> float:
    """Sum of t^3 - t over tie groups of the pooled sample."""
    _, counts = np.unique(pooled, return_counts=True)
    return float(np.sum(counts.astype(float) ** 3 - counts))


def chi_square_test(contingency) -> ChiSquareResult:
    """Pearson chi-square test of independence on a 2D count table.

    All-zero rows/columns are dropped first; a table that degenerates to a
    single row or column yields statistic 0 and p = 1 with the degeneracy flag.
    """
    table = np.asarray(contingency, dtype=float)
    if table.ndim != 2:
        raise ValueError("contingency table must be 2-dimensional")
    if np.any(table < 0):
        raise ValueError("contingency table counts must be non-negative")
    table = table[table.sum(axis=1) > 0][:, table.sum(axis=0) > 0]
    if table.size == 0 or table.shape[0] < 2 or table.shape[1] < 2:
        return ChiSquareResult(statistic=0.0, dof=0, p_value=1.0, degenerate=True)
    total = table.sum()
    expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / total
    statistic = float(np.sum((table - expected) ** 2 / expected))
    dof = (table.shape[0] - 1) * (table.shape[1] - 1)
    return ChiSquareResult(statistic=statistic, dof=dof, p_value=chi2_sf(statistic, dof))


def mann_whitney_u(group_a, group_b) -> MannWhitneyResult:
    """Two-sided Mann-Whitney U test via the normal approximation.

    Returns both the raw U for group_a and the min-orientation U. When every
    pooled value is identical the result is U = n_a*n_b/2, p = 1, degenerate.
    """
    a = np.asarray(group_a, dtype=float)
    b = np.asarray(group_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both groups must be non-empty")
    n_a, n_b = a.size, b.size
    pooled = np.concatenate([a, b])
    ranks = midranks(pooled)
    rank_sum_a = float(ranks[:n_a].sum())
    u_a = rank_sum_a - n_a * (n_a + 1) / 2.0
    u_b = n_a * n_b - u_a
    u_min = min(u_a, u_b)

    n = n_a + n_b
    tie = _tie_term(pooled)
    sigma_sq = (n_a * n_b / 12.0) * ((n + 1.0) - tie / (n * (n - 1.0)))
    if sigma_sq <= 0:
        return MannWhitneyResult(u_a=u_a, u_min=u_min, p_value=1.0, degenerate=True)
    z = (max(u_a, u_b) - n_a * n_b / 2.0 - 0.5) / math.sqrt(sigma_sq)
    p = min(1.0, 2.0 * normal_sf(z))
    return MannWhitneyResult(u_a=u_a, u_min=u_min, p_value=p)


def univariate_screen(dataset: Dataset, alpha: float = 0.05) -> list[UnivariateResult]:
    """Per-feature association test against the class, Bonferroni-corrected.

    Missing values are dropped pairwise. Constant features report p = 1 with
    the degeneracy flag.
    """
    n_features = dataset.n_features
    y = dataset.class_labels
    results = []
    for j, meta in enumerate(dataset.features):
        col = dataset.values[:, j]
        mask = ~np.isnan(col)
        col_obs, y_obs = col[mask], y[mask]
        test = "ChiSquare" if meta.kind is FeatureKind.CATEGORICAL else "MannWhitney"
        if col_obs.size == 0 or np.all(col_obs == col_obs[0]) or len(np.unique(y_obs)) < 2:
            results.append(
                UnivariateResult(meta.name, test, 0.0, 1.0, False, degenerate=True)
            )
            continue
        if meta.kind is FeatureKind.CATEGORICAL:
            levels = np.unique(col_obs)
            table = np.zeros((levels.size, 2))
            for li, level in enumerate(levels):
                sel = col_obs == level
                table[li, 0] = np.sum(y_obs[sel] == 0)
                table[li, 1] = np.sum(y_obs[sel] == 1)
            res = chi_square_test(table)
            stat, p, degen = res.statistic, res.p_value, res.degenerate
        else:
            res = mann_whitney_u(col_obs[y_obs == 0], col_obs[y_obs == 1])
            stat, p, degen = res.u_a, res.p_value, res.degenerate
        results.append(
            UnivariateResult(
                meta.name, test, stat, p,
                significant_bonferroni=(p < alpha / n_features),
                degenerate=degen,
            )
        )
    return results


def correlation_matrix(dataset: Dataset) -> tuple[np.ndarray, list[str]]:
    """Pearson correlation over encoded values, pairwise-complete observations.

    Returns the matrix and the names of constant (flagged) features, whose
    off-diagonal entries are 0.
    """
    if dataset.n_features < 2:
        raise ValueError("correlation matrix requires at least two features")
    f = dataset.n_features
    values = dataset.values
    constant = []
    is_const = np.zeros(f, dtype=bool)
    for j in range(f):
        obs = values[:, j][~np.isnan(values[:, j])]
        if obs.size == 0 or np.all(obs == obs[0]):
            is_const[j] = True
            constant.append(dataset.features[j].name)
    matrix = np.eye(f)
    for i in range(f):
        for j in range(i + 1, f):
            if is_const[i] or is_const[j]:
                continue
            mask = ~np.isnan(values[:, i]) & ~np.isnan(values[:, j])
            xi, xj = values[mask, i], values[mask, j]
            if xi.size < 2 or np.all(xi == xi[0]) or np.all(xj == xj[0]):
                continue
            xi = xi - xi.mean()
            xj = xj - xj.mean()
            denom = math.sqrt(float(xi @ xi) * float(xj @ xj))
            if denom == 0:
                continue
            matrix[i, j] = matrix[j, i] = float(xi @ xj) / denom
    return matrix, constant


@dataclass
class ExploreReport:
    n_instances: int
    n_features: int
    class_counts: tuple[int, int]
    missing_by_feature: dict[str, int]
    kind_counts: tuple[int, int]  # (categorical, quantitative)
    correlation: np.ndarray
    constant_features: list[str]
    univariate: list[UnivariateResult]
    alpha: float

    def to_json(self) -> dict:
        return {
            "n_instances": self.n_instances,
            "n_features": self.n_features,
            "class_counts": {"0": self.class_counts[0], "1": self.class_counts[1]},
            "missing_by_feature": self.missing_by_feature,
            "kind_counts": {
                "categorical": self.kind_counts[0],
                "quantitative": self.kind_counts[1],
            },
            "constant_features": self.constant_features,
            "alpha": self.alpha,
            "bonferroni_threshold": self.alpha / self.n_features,
            "univariate": [
                {
                    "feature": u.feature,
                    "test": u.test,
                    "statistic": u.statistic,
                    "p_value": u.p_value,
                    "significant_bonferroni": u.significant_bonferroni,
                    "degenerate": u.degenerate,
                }
                for u in self.univariate
            ],
        }


def explore(dataset: Dataset, alpha: float = 0.05) -> ExploreReport:
    """Assemble the full exploratory report for a cleaned dataset."""
    corr, constant = correlation_matrix(dataset)
    n_cat = sum(1 for f in dataset.features if f.kind is FeatureKind.CATEGORICAL)
    return ExploreReport(
        n_instances=dataset.n_instances,
        n_features=dataset.n_features,
        class_counts=dataset.class_counts(),
        missing_by_feature={f.name: f.missing_count for f in dataset.features},
        kind_counts=(n_cat, dataset.n_features - n_cat),
        correlation=corr,
        constant_features=constant,
        univariate=univariate_screen(dataset, alpha),
        alpha=alpha,
    )


def write_explore_outputs(report: ExploreReport, dataset: Dataset, out_dir) -> None:
    """Emit explore_report.json, correlation_matrix.csv, univariate.csv."""
    with open(out_dir / "explore_report.json", "w", encoding="utf-8") as fh:
        json.dump(report.to_json(), fh, indent=2)
        fh.write("\n")
    names = dataset.feature_names
    with open(out_dir / "correlation_matrix.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", *names])
        for i, name in enumerate(names):
            writer.writerow([name, *(f"{v:.10g}" for v in report.correlation[i])])
    with open(out_dir / "univariate.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "test", "statistic", "p_value", "significant"])
        for u in report.univariate:
            writer.writerow(
                [u.feature, u.test, f"{u.statistic:.10g}", f"{u.p_value:.10g}",
                 str(u.significant_bonferroni).lower()]
            )
