"""Uniform learner contract and the concrete algorithm registry.

Every learner fits from (hyperparameters, matrix, labels, feature kinds, seed)
and emits class-1 scores in [0, 1]; predictions threshold at 0.5 with ties to
class 1. Training matrices must be complete (imputed) and scaled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from epiml.errors import DataError

ALGORITHMS = ("LR", "NB", "DT", "RF", "LCS")

DEFAULT_LCS_HYPERPARAMETERS = {
    "training_iterations": 200000,
    "max_rules": 2000,
    "p_spec": 0.5,
    "nu": 5.0,
    "theta_ga": 25.0,
    "crossover_rate": 0.8,
    "mutation_rate": 0.04,
    "covering_range_fraction": 0.25,
    "mutation_range_fraction": 0.10,
}

DEFAULT_HYPERPARAMETERS = {
    "LR": {"l2_penalty": 1.0},
    "NB": {},
    "DT": {"max_depth": 10, "min_samples_split": 2, "min_samples_leaf": 1},
    "RF": {
        "n_estimators": 100,
        "max_depth": 10,
        "max_features_fraction": 0.5,
        "min_samples_leaf": 1,
    },
    "LCS": dict(DEFAULT_LCS_HYPERPARAMETERS),
}


@dataclass
class LearnerSpec:
    algorithm: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def resolved_hyperparameters(self) -> dict:
        merged = dict(DEFAULT_HYPERPARAMETERS[self.algorithm])
        merged.update(self.hyperparameters)
        return merged

    def to_json(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "hyperparameters": dict(self.hyperparameters),
            "seed": self.seed,
        }

    @staticmethod
    def from_json(obj: dict) -> "LearnerSpec":
        return LearnerSpec(
            algorithm=obj["algorithm"],
            hyperparameters=dict(obj["hyperparameters"]),
            seed=int(obj["seed"]),
        )


@dataclass
class TrainedModel:
    spec: LearnerSpec
    feature_names: list[str]
    payload: dict
    native_importance: np.ndarray | None = None

    def to_json(self) -> dict:
        from epiml.learners import lcs as _lcs

        payload = (
            _lcs.payload_to_json(self.payload)
            if self.spec.algorithm == "LCS"
            else _jsonify(self.payload)
        )
        return {
            "algorithm": self.spec.algorithm,
            "hyperparameters": dict(self.spec.hyperparameters),
            "seed": self.spec.seed,
            "feature_names": list(self.feature_names),
            "payload": payload,
            "native_importance": (
                None if self.native_importance is None else self.native_importance.tolist()
            ),
        }

    @staticmethod
    def from_json(obj: dict) -> "TrainedModel":
        from epiml.learners import lcs as _lcs

        spec = LearnerSpec(
            algorithm=obj["algorithm"],
            hyperparameters=dict(obj["hyperparameters"]),
            seed=int(obj["seed"]),
        )
        payload = (
            _lcs.payload_from_json(obj["payload"])
            if spec.algorithm == "LCS"
            else _payload_arrays(spec.algorithm, obj["payload"])
        )
        imp = obj.get("native_importance")
        return TrainedModel(
            spec=spec,
            feature_names=list(obj["feature_names"]),
            payload=payload,
            native_importance=None if imp is None else np.array(imp, dtype=float),
        )


def _jsonify(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {k: _jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonify(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


def _payload_arrays(algorithm: str, payload: dict) -> dict:
    from epiml.learners import bayes, forest, logistic, tree

    module = {"LR": logistic, "NB": bayes, "DT": tree, "RF": forest}[algorithm]
    return module.payload_from_json(payload)


def _validate_fit_inputs(X: np.ndarray, y: np.ndarray) -> None:
    if not np.all(np.isfinite(X)):
        raise DataError("training matrix contains non-finite values")
    classes = np.unique(y)
    if classes.size < 2:
        raise DataError("training labels contain a single class")


def fit_model(
    spec: LearnerSpec,
    X: np.ndarray,
    y: np.ndarray,
    kinds: np.ndarray,
    feature_names: list[str],
) -> TrainedModel:
    """Train one model; deterministic given (spec, data, seed)."""
    from epiml.learners import bayes, forest, lcs, logistic, tree

    _validate_fit_inputs(X, y)
    module = {"LR": logistic, "NB": bayes, "DT": tree, "RF": forest, "LCS": lcs}[spec.algorithm]
    payload, importance = module.fit(
        spec.resolved_hyperparameters(), X, y, kinds, spec.seed
    )
    return TrainedModel(
        spec=spec,
        feature_names=list(feature_names),
        payload=payload,
        native_importance=importance,
    )


def predict_proba(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """Per-instance class-1 score in [0, 1]."""
    from epiml.learners import bayes, forest, lcs, logistic, tree

    if X.shape[1] != len(model.feature_names):
        raise DataError(
            f"feature count mismatch: matrix has {X.shape[1]} columns, "
            f"model expects {len(model.feature_names)}"
        )
    module = {"LR": logistic, "NB": bayes, "DT": tree, "RF": forest, "LCS": lcs}[
        model.spec.algorithm
    ]
    return module.predict_proba(model.payload, X)


def predict(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """Hard 0/1 predictions; a score of exactly 0.5 resolves to class 1."""
    return (predict_proba(model, X) >= 0.5).astype(np.int8)
