"""Dataset loading and the evolving labeled/unlabeled pool partition.

A loaded dataset keeps its hidden labels, but only harness/oracle code may
read them: strategy code receives feature arrays and revealed labels, never
the label vector itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Protocol

import numpy as np
import pandas as pd


class DataError(Exception):
    """Raised for malformed input data or infeasible pool configurations."""


class TransactionRecord(NamedTuple):
    row_id: int
    features: np.ndarray
    label: int


@dataclass(frozen=True)
class DatasetDescriptor:
    name: str
    n_samples: int
    dimension: int
    anomaly_proportion: float


@dataclass(frozen=True)
class SplitConfig:
    init_fraction: float = 0.01
    subsample_size: int | None = None
    seed: int | None = None  # None = let the run derive it from its own seed
    min_positives: int = 1
    min_negatives: int = 1
    max_retries: int = 100

    def validate(self) -> None:
        if self.seed is None:
            raise DataError("initial_split needs a concrete split seed")
        if not 0.0 < self.init_fraction < 1.0:
            raise DataError(f"init_fraction must be in (0,1), got {self.init_fraction}")
        if self.subsample_size is not None and self.subsample_size < 1:
            raise DataError("subsample_size must be >= 1")
        if self.min_positives < 0 or self.min_negatives < 0:
            raise DataError("class minima must be >= 0")


class Dataset:
    """Feature matrix plus hidden labels; row order defines row_id."""

    def __init__(self, name: str, features: np.ndarray, labels: np.ndarray,
                 feature_names: list[str] | None = None):
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        if features.ndim != 2:
            raise DataError("features must be a 2-D array")
        if labels.shape != (features.shape[0],):
            raise DataError("labels must align with feature rows")
        bad = ~np.isin(labels, (0, 1))
        if bad.any():
            raise DataError(f"label outside {{0,1}} at row {int(np.argmax(bad))}")
        self.name = name
        self.features = features
        self.labels = labels
        self.feature_names = list(feature_names) if feature_names else [
            f"f{i}" for i in range(features.shape[1])
        ]
        if len(self.feature_names) != features.shape[1]:
            raise DataError("feature_names must match feature dimension")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def dimension(self) -> int:
        return self.features.shape[1]

    def descriptor(self) -> DatasetDescriptor:
        n = self.n_samples
        return DatasetDescriptor(
            name=self.name,
            n_samples=n,
            dimension=self.dimension,
            anomaly_proportion=float(np.count_nonzero(self.labels)) / n,
        )

    def record(self, row_id: int) -> TransactionRecord:
        return TransactionRecord(int(row_id), self.features[row_id], int(self.labels[row_id]))


@dataclass(frozen=True)
class PoolState:
    """Immutable snapshot of the labeled/unlabeled partition at step t.

    `labeled` preserves query order (initial split first); `unlabeled` is kept
    sorted ascending so advice vectors have a canonical row order.
    """

    labeled: tuple[int, ...]
    unlabeled: np.ndarray
    step: int = 0

    @property
    def n_labeled(self) -> int:
        return len(self.labeled)

    @property
    def n_unlabeled(self) -> int:
        return int(self.unlabeled.shape[0])

    def labeled_array(self) -> np.ndarray:
        return np.asarray(self.labeled, dtype=np.int64)

    def active_ids(self) -> np.ndarray:
        return np.sort(np.concatenate([self.labeled_array(), self.unlabeled]))

    def check_partition(self) -> None:
        lab = set(self.labeled)
        unlab = set(int(r) for r in self.unlabeled)
        if lab & unlab:
            raise DataError("labeled and unlabeled sets overlap")


class LabelOracle(Protocol):
    def label_of(self, row_id: int) -> int: ...


class SimulatedOracle:
    """Answers queries from the dataset's hidden labels."""

    def __init__(self, dataset: Dataset):
        self._labels = dataset.labels

    def label_of(self, row_id: int) -> int:
        return int(self._labels[row_id])


def load_dataset(path: str | Path, label_column: str = "label",
                 name: str | None = None) -> Dataset:
    """Load a canonical CSV: header row, one 0/1 label column, numeric features."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    try:
        frame = pd.read_csv(path)
    except Exception as exc:  # pragma: no cover - pandas error text varies
        raise DataError(f"cannot parse CSV {path}: {exc}") from exc
    if frame.shape[0] == 0:
        raise DataError(f"empty dataset: {path}")
    if label_column not in frame.columns:
        raise DataError(f"label column {label_column!r} not in header {list(frame.columns)}")
    feature_cols = [c for c in frame.columns if c != label_column]
    if not feature_cols:
        raise DataError("dataset has no feature columns")
    for col in feature_cols:
        values = pd.to_numeric(frame[col], errors="coerce")
        bad = values.isna() & ~frame[col].isna()
        if frame[col].isna().any():
            row = int(frame.index[frame[col].isna()][0])
            raise DataError(f"missing value at row {row}, column {col!r}")
        if bad.any():
            row = int(frame.index[bad][0])
            raise DataError(
                f"non-numeric feature cell {frame[col].iloc[row]!r} at row {row}, column {col!r}"
            )
        frame[col] = values
    labels_raw = pd.to_numeric(frame[label_column], errors="coerce")
    if labels_raw.isna().any() or not labels_raw.isin((0, 1)).all():
        row = int(frame.index[~labels_raw.isin((0, 1))][0])
        raise DataError(f"label outside {{0,1}} at row {row}")
    return Dataset(
        name=name or path.stem,
        features=frame[feature_cols].to_numpy(dtype=np.float64),
        labels=labels_raw.to_numpy(dtype=np.int64),
        feature_names=feature_cols,
    )


def initial_split(dataset: Dataset, config: SplitConfig) -> PoolState:
    """Draw the initial labeled set, optionally after subsampling the pool.

    Uniform without replacement; resampled (bounded retries) until the labeled
    set holds at least `min_positives`/`min_negatives` of each class.
    Deterministic given (dataset, config).
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    active = np.arange(dataset.n_samples, dtype=np.int64)
    if config.subsample_size is not None and config.subsample_size < dataset.n_samples:
        active = np.sort(rng.choice(active, size=config.subsample_size, replace=False))
    n_active = active.shape[0]
    n_init = int(np.floor(config.init_fraction * n_active))
    if n_init < 1:
        raise DataError(
            f"init_fraction={config.init_fraction} yields 0 labeled rows for {n_active} samples"
        )
    labels = dataset.labels
    for _ in range(config.max_retries):
        chosen = rng.choice(active, size=n_init, replace=False)
        picked = labels[chosen]
        if (np.count_nonzero(picked == 1) >= config.min_positives
                and np.count_nonzero(picked == 0) >= config.min_negatives):
            labeled = tuple(int(r) for r in chosen)
            unlabeled = np.setdiff1d(active, chosen, assume_unique=False)
            return PoolState(labeled=labeled, unlabeled=unlabeled, step=0)
    raise DataError(
        f"retry budget exhausted: no {n_init}-row sample with >={config.min_positives} "
        f"positives and >={config.min_negatives} negatives in {config.max_retries} tries"
    )


def move_to_labeled(pool: PoolState, row_id: int) -> PoolState:
    """Move one row from unlabeled to labeled and advance the step counter."""
    row_id = int(row_id)
    idx = np.searchsorted(pool.unlabeled, row_id)
    if idx >= pool.unlabeled.shape[0] or pool.unlabeled[idx] != row_id:
        if row_id in pool.labeled:
            raise DataError(f"row {row_id} is already labeled")
        raise DataError(f"row {row_id} is not in the pool")
    unlabeled = np.delete(pool.unlabeled, idx)
    return PoolState(labeled=pool.labeled + (row_id,), unlabeled=unlabeled,
                     step=pool.step + 1)


def apply_query(pool: PoolState, row_id: int, oracle: LabelOracle) -> tuple[PoolState, int]:
    """Reveal one label through the oracle; returns the advanced pool and the label."""
    new_pool = move_to_labeled(pool, row_id)
    return new_pool, int(oracle.label_of(int(row_id)))


def unlabeled_prevalence(pool: PoolState, dataset: Dataset) -> float:
    """Fraction of hidden positives left in the pool. Harness-side only."""
    if pool.n_unlabeled == 0:
        raise DataError("unlabeled pool is empty")
    return float(np.count_nonzero(dataset.labels[pool.unlabeled])) / pool.n_unlabeled
