"""Deterministic, leakage-safe binary classification analysis pipeline.

Stages: data cleaning and exploration, k-fold partitioning, leakage-safe
scaling and imputation, collective feature selection (mutual information +
MultiSURF), five learners with budgeted nested-CV hyperparameter search,
metric/statistics reporting, and composite feature-importance aggregation.
A built-in heterogeneous-epistasis SNP simulator provides the benchmark data.
"""

__version__ = "0.1.0"

from epiml.data import Dataset, FeatureKind, FeatureMeta, load_csv
from epiml.partition import FoldPlan, make_folds, split
from epiml.simulate import SimConfig, simulate

__all__ = [
    "Dataset",
    "FeatureKind",
    "FeatureMeta",
    "FoldPlan",
    "SimConfig",
    "load_csv",
    "make_folds",
    "simulate",
    "split",
]
