"""k-fold cross-validation partitioning: random, stratified, or matched."""

from __future__ import annotations

import csv
import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from epiml.data import Dataset
from epiml.errors import ConfigurationError, DataError

logger = logging.getLogger(__name__)


class CVStrategy(enum.Enum):
    RANDOM = "random"
    STRATIFIED = "stratified"
    MATCHED = "matched"


@dataclass
class FoldPlan:
    k: int
    strategy: CVStrategy
    assignment: np.ndarray  # per-instance fold index, int32
    seed: int

    def __post_init__(self):
        self.assignment.setflags(write=False)

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)

    def write_csv(self, path, instance_ids: list[str] | None = None) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["instance_id", "fold"])
            for i, fold in enumerate(self.assignment):
                ident = instance_ids[i] if instance_ids is not None else str(i)
                writer.writerow([ident, int(fold)])

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "strategy": self.strategy.value,
            "seed": self.seed,
            "assignment": [int(v) for v in self.assignment],
        }

    @staticmethod
    def from_json(obj: dict) -> "FoldPlan":
        return FoldPlan(
            k=int(obj["k"]),
            strategy=CVStrategy(obj["strategy"]),
            assignment=np.array(obj["assignment"], dtype=np.int32),
            seed=int(obj["seed"]),
        )


def _round_robin(indices: np.ndarray, k: int, assignment: np.ndarray) -> None:
    for pos, idx in enumerate(indices):
        assignment[idx] = pos % k


def random_assignment(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded shuffle then round-robin."""
    assignment = np.full(n, -1, dtype=np.int32)
    _round_robin(rng.permutation(n), k, assignment)
    return assignment


def stratified_assignment(labels: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded shuffle within each class then round-robin per class; per-fold
    class counts deviate from perfect proportionality by at most 1."""
    n = labels.shape[0]
    assignment = np.full(n, -1, dtype=np.int32)
    for cls in (0, 1):
        members = np.flatnonzero(labels == cls)
        if members.size < k:
            raise DataError(
                f"stratified CV needs at least k={k} instances per class, "
                f"class {cls} has {members.size}"
            )
        _round_robin(members[rng.permutation(members.size)], k, assignment)
    return assignment


def matched_assignment(
    labels: np.ndarray,
    match_ids: list[str],
    k: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Match groups are atomic: largest group first to the fold with the
    smallest current case count (ties -> smallest fold size, then lowest fold
    index). Equal-size groups are processed in seeded shuffled order so the
    assignment is seed-sensitive."""
    n = labels.shape[0]
    groups: dict[str, list[int]] = {}
    for i, gid in enumerate(match_ids):
        groups.setdefault(gid, []).append(i)
    max_group = max(len(v) for v in groups.values())
    if max_group > math.ceil(n / k):
        raise DataError(
            f"largest match group ({max_group}) exceeds fold capacity "
            f"ceil({n}/{k})={math.ceil(n / k)}"
        )
    for gid, members in groups.items():
        if len({int(labels[i]) for i in members}) == 1:
            logger.info("match group %r contains a single class", gid)
    keys = list(groups)
    shuffled = [keys[i] for i in rng.permutation(len(keys))]
    shuffled.sort(key=lambda gid: -len(groups[gid]))
    assignment = np.full(n, -1, dtype=np.int32)
    fold_cases = np.zeros(k, dtype=np.int64)
    fold_sizes = np.zeros(k, dtype=np.int64)
    for gid in shuffled:
        members = groups[gid]
        target = min(range(k), key=lambda f: (fold_cases[f], fold_sizes[f], f))
        for i in members:
            assignment[i] = target
        fold_cases[target] += sum(int(labels[i]) for i in members)
        fold_sizes[target] += len(members)
    return assignment


def make_folds(dataset: Dataset, k: int, strategy: CVStrategy, seed: int) -> FoldPlan:
    """Assign every instance to one of k folds under the chosen strategy."""
    n = dataset.n_instances
    if k < 2:
        raise ConfigurationError(f"k must be at least 2, got {k}")
    if k > n:
        raise ConfigurationError(f"k={k} exceeds the number of instances ({n})")
    rng = np.random.default_rng(seed)
    if strategy is CVStrategy.RANDOM:
        assignment = random_assignment(n, k, rng)
    elif strategy is CVStrategy.STRATIFIED:
        assignment = stratified_assignment(dataset.class_labels, k, rng)
    elif strategy is CVStrategy.MATCHED:
        if dataset.match_group_ids is None:
            raise ConfigurationError("matched CV requires a match group ID column")
        assignment = matched_assignment(dataset.class_labels, dataset.match_group_ids, k, rng)
    else:  # pragma: no cover - enum is exhaustive
        raise ConfigurationError(f"unknown CV strategy {strategy}")

    counts = np.bincount(assignment, minlength=k)
    if np.any(counts == 0):
        raise DataError(f"fold assignment left an empty fold (counts {counts.tolist()})")
    return FoldPlan(k=k, strategy=strategy, assignment=assignment, seed=seed)


def split(dataset: Dataset, plan: FoldPlan, fold: int) -> tuple[np.ndarray, np.ndarray]:
    """Train/test instance index arrays for one fold, in original order."""
    if not 0 <= fold < plan.k:
        raise ConfigurationError(f"fold {fold} out of range for k={plan.k}")
    if plan.assignment.shape[0] != dataset.n_instances:
        raise DataError("fold plan does not match the dataset size")
    return plan.train_indices(fold), plan.test_indices(fold)
