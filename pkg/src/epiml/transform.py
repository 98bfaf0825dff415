"""Leakage-safe feature scaling and missing-value imputation.

Scaler statistics come from training data only. Imputation fills categorical
features with the fitting view's mode and quantitative features by
round-robin chained ordinary-least-squares re-prediction. Per the pipeline's
stated procedure, evaluation-time test folds are imputed by refitting on the
test fold alone; prediction on new data reuses archived training-fit states.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from epiml.errors import DataError

logger = logging.getLogger(__name__)

DEFAULT_MAX_ROUNDS = 10
CONVERGENCE_TOL = 1e-4
RIDGE_PENALTY = 1e-6


@dataclass
class ScalerState:
    means: np.ndarray
    stds: np.ndarray  # population SD over observed values; 0 for constant features

    @property
    def constant_flags(self) -> np.ndarray:
        return self.stds == 0

    def to_json(self) -> dict:
        return {"means": self.means.tolist(), "stds": self.stds.tolist()}

    @staticmethod
    def from_json(obj: dict) -> "ScalerState":
        return ScalerState(
            means=np.array(obj["means"], dtype=float),
            stds=np.array(obj["stds"], dtype=float),
        )


@dataclass
class ImputerState:
    modes: dict[int, float]  # categorical feature index -> fill value
    models: dict[int, dict]  # quantitative feature index -> {coef, intercept}
    fallback_means: np.ndarray  # per-feature observed mean of the fitting view
    rounds_run: int
    degenerate_features: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "modes": {str(k): v for k, v in self.modes.items()},
            "models": {
                str(k): {"coef": m["coef"].tolist(), "intercept": m["intercept"]}
                for k, m in self.models.items()
            },
            "fallback_means": self.fallback_means.tolist(),
            "rounds_run": self.rounds_run,
            "degenerate_features": list(self.degenerate_features),
        }

    @staticmethod
    def from_json(obj: dict) -> "ImputerState":
        return ImputerState(
            modes={int(k): float(v) for k, v in obj["modes"].items()},
            models={
                int(k): {"coef": np.array(m["coef"], dtype=float), "intercept": float(m["intercept"])}
                for k, m in obj["models"].items()
            },
            fallback_means=np.array(obj["fallback_means"], dtype=float),
            rounds_run=int(obj["rounds_run"]),
            degenerate_features=[int(v) for v in obj.get("degenerate_features", [])],
        )


def fit_scaler(train_values: np.ndarray) -> ScalerState:
    """Per-feature mean and population SD over observed (non-missing) cells."""
    if train_values.shape[0] == 0:
        raise DataError("cannot fit a scaler on an empty view")
    n_features = train_values.shape[1]
    means = np.zeros(n_features)
    stds = np.zeros(n_features)
    for j in range(n_features):
        obs = train_values[:, j][~np.isnan(train_values[:, j])]
        if obs.size == 0:
            raise DataError(f"feature column {j} has no observed values in the training view")
        means[j] = obs.mean()
        stds[j] = obs.std()
    return ScalerState(means=means, stds=stds)


def apply_scaler(values: np.ndarray, state: ScalerState) -> np.ndarray:
    """x -> (x - mean) / std; constant features map to 0; missing cells stay missing."""
    if values.shape[1] != state.means.shape[0]:
        raise DataError(
            f"feature count mismatch: view has {values.shape[1]}, "
            f"scaler was fit on {state.means.shape[0]}"
        )
    out = values - state.means
    safe = np.where(state.stds == 0, 1.0, state.stds)
    out = out / safe
    out[:, state.stds == 0] = 0.0
    out[np.isnan(values)] = np.nan
    return out


def inverse_scaler(values: np.ndarray, state: ScalerState) -> np.ndarray:
    """Undo apply_scaler for observed cells (constant features recover the mean)."""
    return values * state.stds + state.means


def _solve_ols(design: np.ndarray, target: np.ndarray) -> np.ndarray | None:
    """Least-squares coefficients via normal equations; ridge fallback when
    singular; None when degenerate either way."""
    gram = design.T @ design
    rhs = design.T @ target
    try:
        return np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        pass
    try:
        return np.linalg.solve(gram + RIDGE_PENALTY * np.eye(gram.shape[0]), rhs)
    except np.linalg.LinAlgError:
        return None


def fit_impute(
    values: np.ndarray,
    kinds: np.ndarray,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> tuple[ImputerState, np.ndarray]:
    """Fit the imputer on a (scaled) view and return (state, completed copy).

    Categorical features take the view's mode (ties -> lowest value).
    Quantitative features start at the feature mean and are refined by cycling
    features with missingness in ascending-missingness order, regressing each
    on all other features over rows where it is observed, until the largest
    cell change drops below 1e-4 or max_rounds is reached.
    """
    work = np.array(values, dtype=float)
    n, f = work.shape
    missing_mask = np.isnan(work)
    state = ImputerState(
        modes={}, models={}, fallback_means=np.zeros(f), rounds_run=0
    )

    for j in range(f):
        obs = work[:, j][~missing_mask[:, j]]
        if obs.size == 0:
            raise DataError(f"feature column {j} has no observed values to impute from")
        state.fallback_means[j] = obs.mean()

    # Mode fill for categorical features.
    for j in range(f):
        if kinds[j] != 1:
            continue
        obs = work[:, j][~missing_mask[:, j]]
        levels, counts = np.unique(obs, return_counts=True)
        mode = float(levels[np.argmax(counts)])  # ties -> lowest (unique sorts ascending)
        state.modes[j] = mode
        if missing_mask[:, j].any():
            work[missing_mask[:, j], j] = mode

    # Chained OLS for quantitative features with missingness.
    targets = [j for j in range(f) if kinds[j] == 0 and missing_mask[:, j].any()]
    targets.sort(key=lambda j: (int(missing_mask[:, j].sum()), j))
    for j in targets:
        work[missing_mask[:, j], j] = state.fallback_means[j]

    others = {j: np.array([c for c in range(f) if c != j]) for j in targets}
    for rounds in range(1, max_rounds + 1):
        max_change = 0.0
        for j in targets:
            rows_obs = ~missing_mask[:, j]
            design = np.column_stack([work[rows_obs][:, others[j]], np.ones(int(rows_obs.sum()))])
            coef = _solve_ols(design, work[rows_obs, j])
            if coef is None:
                if j not in state.degenerate_features:
                    logger.warning("imputation regression degenerate for feature %d; mean fill", j)
                    state.degenerate_features.append(j)
                state.models[j] = {"coef": np.zeros(f - 1), "intercept": state.fallback_means[j]}
                new_vals = np.full(int(missing_mask[:, j].sum()), state.fallback_means[j])
            else:
                state.models[j] = {"coef": coef[:-1], "intercept": float(coef[-1])}
                new_vals = work[missing_mask[:, j]][:, others[j]] @ coef[:-1] + coef[-1]
            change = np.abs(new_vals - work[missing_mask[:, j], j])
            if change.size:
                max_change = max(max_change, float(change.max()))
            work[missing_mask[:, j], j] = new_vals
        state.rounds_run = rounds
        if max_change < CONVERGENCE_TOL:
            break
    return state, work


def apply_impute_with_state(values: np.ndarray, kinds: np.ndarray, state: ImputerState) -> np.ndarray:
    """Complete a view using archived training-fit states (prediction time).

    Missing categorical cells take the archived mode; missing quantitative
    cells start at the archived mean and get one re-prediction pass per
    archived model, in ascending feature order.
    """
    work = np.array(values, dtype=float)
    missing_mask = np.isnan(work)
    f = work.shape[1]
    for j in range(f):
        if not missing_mask[:, j].any():
            continue
        if kinds[j] == 1:
            work[missing_mask[:, j], j] = state.modes.get(j, state.fallback_means[j])
        else:
            work[missing_mask[:, j], j] = state.fallback_means[j]
    for j in sorted(state.models):
        if not missing_mask[:, j].any():
            continue
        model = state.models[j]
        others = np.array([c for c in range(f) if c != j])
        work[missing_mask[:, j], j] = (
            work[missing_mask[:, j]][:, others] @ model["coef"] + model["intercept"]
        )
    return work


def apply_impute_refit(
    values: np.ndarray,
    kinds: np.ndarray,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> np.ndarray:
    """Complete a view by refitting the imputer on the view itself (test folds)."""
    _, completed = fit_impute(values, kinds, max_rounds)
    return completed
