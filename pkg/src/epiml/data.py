"""Tabular dataset loading, cleaning, and the canonical in-memory data model.

A Dataset is an instance-major float matrix (NaN = missing) plus per-feature
metadata. Categorical levels are re-encoded to integer codes 0..L-1 in sorted
level order so that runs are deterministic regardless of row order; the
original levels are kept for decoding on write-out.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from epiml.errors import ConfigurationError, DataError

logger = logging.getLogger(__name__)

MISSING_TOKENS = {"", "NA"}
DEFAULT_DISTINCT_THRESHOLD = 10


class FeatureKind(enum.Enum):
    CATEGORICAL = "categorical"
    QUANTITATIVE = "quantitative"


@dataclass
class FeatureMeta:
    """Per-feature metadata fixed at load time."""

    name: str
    kind: FeatureKind
    observed_levels: list = field(default_factory=list)  # categorical: original levels, sorted
    observed_min: float | None = None
    observed_max: float | None = None
    missing_count: int = 0

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind.value,
            "observed_levels": list(self.observed_levels),
            "observed_min": self.observed_min,
            "observed_max": self.observed_max,
            "missing_count": self.missing_count,
        }

    @staticmethod
    def from_json(obj: dict) -> "FeatureMeta":
        return FeatureMeta(
            name=obj["name"],
            kind=FeatureKind(obj["kind"]),
            observed_levels=list(obj["observed_levels"]),
            observed_min=obj["observed_min"],
            observed_max=obj["observed_max"],
            missing_count=int(obj["missing_count"]),
        )


@dataclass
class CleaningReport:
    instances_dropped_missing_class: int
    columns_excluded: list
    rows_in: int
    rows_out: int

    def to_json(self) -> dict:
        return {
            "instances_dropped_missing_class": self.instances_dropped_missing_class,
            "columns_excluded": list(self.columns_excluded),
            "rows_in": self.rows_in,
            "rows_out": self.rows_out,
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2)
            fh.write("\n")


@dataclass
class Dataset:
    """Immutable cleaned dataset; values[i, j] is NaN where cell (i, j) is missing."""

    features: list[FeatureMeta]
    values: np.ndarray  # float64, shape (n_instances, n_features)
    class_labels: np.ndarray  # int8 in {0, 1}
    instance_ids: list[str] | None = None
    match_group_ids: list[str] | None = None

    def __post_init__(self):
        self.values.setflags(write=False)
        self.class_labels.setflags(write=False)

    @property
    def n_instances(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    @property
    def feature_names(self) -> list[str]:
        return [f.name for f in self.features]

    @property
    def feature_kinds(self) -> list[FeatureKind]:
        return [f.kind for f in self.features]

    def kinds_array(self) -> np.ndarray:
        """uint8 array: 1 where categorical, 0 where quantitative."""
        return np.array(
            [1 if f.kind is FeatureKind.CATEGORICAL else 0 for f in self.features],
            dtype=np.uint8,
        )

    def class_counts(self) -> tuple[int, int]:
        return int(np.sum(self.class_labels == 0)), int(np.sum(self.class_labels == 1))


def _parse_cell(text: str) -> float | str | None:
    """Missing -> None, numeric -> float, anything else -> stripped text."""
    stripped = text.strip()
    if stripped in MISSING_TOKENS:
        return None
    try:
        value = float(stripped)
    except ValueError:
        return stripped
    if math.isnan(value):
        return None
    return value


def infer_kind(column: list, distinct_threshold: int = DEFAULT_DISTINCT_THRESHOLD) -> FeatureKind:
    """Categorical iff every observed value is an integral number and the
    distinct observed count is at most distinct_threshold; text columns are
    always categorical."""
    observed = [v for v in column if v is not None]
    if not observed:
        raise DataError("cannot infer kind of an all-missing column")
    if any(isinstance(v, str) for v in observed):
        return FeatureKind.CATEGORICAL
    if all(float(v).is_integer() for v in observed) and len(set(observed)) <= distinct_threshold:
        return FeatureKind.CATEGORICAL
    return FeatureKind.QUANTITATIVE


def _encode_column(column: list, kind: FeatureKind, name: str) -> tuple[np.ndarray, FeatureMeta]:
    n = len(column)
    values = np.full(n, np.nan)
    missing = sum(1 for v in column if v is None)
    if kind is FeatureKind.CATEGORICAL:
        observed = [v for v in column if v is not None]
        if any(isinstance(v, str) for v in observed):
            levels = sorted({str(v) for v in observed})
            lookup = {lv: code for code, lv in enumerate(levels)}
            for i, v in enumerate(column):
                if v is not None:
                    values[i] = lookup[str(v)]
        else:
            levels = sorted({float(v) for v in observed})
            lookup = {lv: code for code, lv in enumerate(levels)}
            for i, v in enumerate(column):
                if v is not None:
                    values[i] = lookup[float(v)]
        meta = FeatureMeta(name=name, kind=kind, observed_levels=levels, missing_count=missing)
    else:
        for i, v in enumerate(column):
            if v is not None:
                if isinstance(v, str):
                    raise DataError(f"non-numeric value {v!r} in quantitative column {name!r}")
                values[i] = float(v)
        observed = values[~np.isnan(values)]
        meta = FeatureMeta(
            name=name,
            kind=kind,
            observed_min=float(observed.min()),
            observed_max=float(observed.max()),
            missing_count=missing,
        )
    return values, meta


def load_csv(
    path,
    class_label: str,
    instance_id: str | None = None,
    match_id: str | None = None,
    excluded: list[str] | None = None,
    type_overrides: dict[str, FeatureKind] | None = None,
    distinct_threshold: int = DEFAULT_DISTINCT_THRESHOLD,
) -> tuple[Dataset, CleaningReport]:
    """Load and clean a CSV file (RFC-4180, UTF-8, empty cell or "NA" = missing).

    Cleaning drops instances with a missing class value and removes excluded /
    ID / match columns from the feature list. Raises ConfigurationError for
    bad column configuration and DataError for invalid content.
    """
    excluded = list(excluded or [])
    type_overrides = dict(type_overrides or {})

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        rows = [row for row in reader if row]

    header = [h.strip() for h in header]
    if class_label not in header:
        raise ConfigurationError(f"class column {class_label!r} not found in header")
    for special, label in ((instance_id, "instance ID"), (match_id, "match ID")):
        if special is not None and special not in header:
            raise ConfigurationError(f"{label} column {special!r} not found in header")
    for name in excluded:
        if name not in header:
            raise ConfigurationError(f"excluded column {name!r} not found in header")

    col_index = {name: i for i, name in enumerate(header)}
    if len(col_index) != len(header):
        raise DataError("duplicate column names in header")

    rows_in = len(rows)
    for row in rows:
        if len(row) != len(header):
            raise DataError(
                f"row with {len(row)} cells does not match header width {len(header)}"
            )

    # Drop instances with a missing class value, rejecting non-binary codes.
    class_idx = col_index[class_label]
    kept_rows = []
    dropped_missing_class = 0
    labels: list[int] = []
    for row in rows:
        cell = _parse_cell(row[class_idx])
        if cell is None:
            dropped_missing_class += 1
            continue
        if not isinstance(cell, float) or cell not in (0.0, 1.0):
            raise DataError(
                f"class column {class_label!r} must contain 0/1 values, "
                f"found {row[class_idx].strip()!r}"
            )
        labels.append(int(cell))
        kept_rows.append(row)

    non_feature = {class_label, *excluded}
    if instance_id is not None:
        non_feature.add(instance_id)
    if match_id is not None:
        non_feature.add(match_id)

    instance_ids = None
    if instance_id is not None:
        instance_ids = [row[col_index[instance_id]].strip() for row in kept_rows]
        if len(set(instance_ids)) != len(instance_ids):
            raise DataError(f"instance ID column {instance_id!r} contains duplicates")
    match_ids = None
    if match_id is not None:
        match_ids = [row[col_index[match_id]].strip() for row in kept_rows]

    columns_excluded = [name for name in header if name in non_feature and name != class_label]

    feature_names = [name for name in header if name not in non_feature]
    columns: list[np.ndarray] = []
    metas: list[FeatureMeta] = []
    for name in feature_names:
        idx = col_index[name]
        raw = [_parse_cell(row[idx]) for row in kept_rows]
        if all(v is None for v in raw):
            logger.warning("dropping all-missing column %r", name)
            columns_excluded.append(name)
            continue
        kind = type_overrides.get(name) or infer_kind(raw, distinct_threshold)
        values, meta = _encode_column(raw, kind, name)
        columns.append(values)
        metas.append(meta)

    if not metas:
        raise DataError("no usable feature columns remain after cleaning")

    label_arr = np.array(labels, dtype=np.int8)
    n0 = int(np.sum(label_arr == 0))
    n1 = int(np.sum(label_arr == 1))
    if n0 == 0 or n1 == 0:
        raise DataError(
            f"both classes must be present after cleaning (class 0: {n0}, class 1: {n1})"
        )

    dataset = Dataset(
        features=metas,
        values=np.column_stack(columns),
        class_labels=label_arr,
        instance_ids=instance_ids,
        match_group_ids=match_ids,
    )
    report = CleaningReport(
        instances_dropped_missing_class=dropped_missing_class,
        columns_excluded=columns_excluded,
        rows_in=rows_in,
        rows_out=len(kept_rows),
    )
    return dataset, report


def _decode_cell(meta: FeatureMeta, value: float) -> str:
    if np.isnan(value):
        return ""
    if meta.kind is FeatureKind.CATEGORICAL:
        level = meta.observed_levels[int(value)]
        return str(level) if isinstance(level, str) else repr(float(level))
    return repr(float(value))


def save_csv(dataset: Dataset, path, class_label: str = "Class",
             instance_id: str | None = None, match_id: str | None = None) -> None:
    """Write a cleaned Dataset back to CSV; load_csv on the result round-trips."""
    header = []
    if instance_id is not None and dataset.instance_ids is not None:
        header.append(instance_id)
    if match_id is not None and dataset.match_group_ids is not None:
        header.append(match_id)
    header.extend(dataset.feature_names)
    header.append(class_label)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(dataset.n_instances):
            row = []
            if instance_id is not None and dataset.instance_ids is not None:
                row.append(dataset.instance_ids[i])
            if match_id is not None and dataset.match_group_ids is not None:
                row.append(dataset.match_group_ids[i])
            row.extend(
                _decode_cell(meta, dataset.values[i, j])
                for j, meta in enumerate(dataset.features)
            )
            row.append(str(int(dataset.class_labels[i])))
            writer.writerow(row)
