"""Map public anomaly benchmarks to the canonical CSV format.

Canonical format: header row, numeric feature columns, one `label` column
with 0 (legitimate) / 1 (fraud/anomaly). Row order defines row_id.

Raw formats handled:

shuttle     Statlog Shuttle, whitespace-separated, 9 integer features plus a
            class column 1..7 (concatenate the .trn and .tst partitions to
            get the full file you work with). Class 1 (Rad Flow) is by far
            the majority and maps to 0; every other class maps to 1.

covtype     UCI covertype, comma-separated, 54 features plus cover type 1..7.
            Rows are filtered to cover types {2, 4, 5}; type 2 (lodgepole
            pine) maps to 0 and types {4, 5} (cottonwood/willow, aspen) map
            to 1. That keeps 283301+2747+9493 = 295541 rows of which
            12240/295541 = 4.14% are anomalies; no other subset of classes
            reproduces those figures, but treat the proportion as a property
            of this mapping rather than a ground truth.

creditcard  Kaggle credit-card fraud CSV with header
            Time,V1..V28,Amount,Class; all 30 feature columns are kept and
            Class becomes the label.

synth       Not a public set: generates the desk-scale clustered-fraud
            Gaussian task so the demo configs run out of the box.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from .datapool import DataError, Dataset, load_dataset
from .synth import make_clustered_fraud_dataset

PREPARED_DATASETS = ("shuttle", "covtype", "creditcard", "synth")


def _write_canonical(features: np.ndarray, labels: np.ndarray,
                     feature_names: list[str], out_path: Path) -> None:
    frame = pd.DataFrame(features, columns=feature_names)
    frame["label"] = labels
    frame.to_csv(out_path, index=False)


def _prepare_shuttle(raw_path: Path, out_path: Path) -> None:
    frame = pd.read_csv(raw_path, sep=r"\s+", header=None)
    if frame.shape[1] != 10:
        raise DataError(
            f"shuttle raw file should have 10 columns (9 features + class), "
            f"got {frame.shape[1]} in {raw_path}")
    classes = frame.iloc[:, -1].astype(int)
    if not classes.isin(range(1, 8)).all():
        bad = int(frame.index[~classes.isin(range(1, 8))][0])
        raise DataError(f"shuttle class outside 1..7 at line {bad + 1}")
    labels = (classes != 1).astype(int).to_numpy()
    features = frame.iloc[:, :-1].to_numpy(dtype=np.float64)
    _write_canonical(features, labels, [f"f{i}" for i in range(9)], out_path)


def _prepare_covtype(raw_path: Path, out_path: Path) -> None:
    frame = pd.read_csv(raw_path, header=None)
    if frame.shape[1] != 55:
        raise DataError(
            f"covtype raw file should have 55 columns (54 features + cover type), "
            f"got {frame.shape[1]} in {raw_path}")
    cover = frame.iloc[:, -1].astype(int)
    if not cover.isin(range(1, 8)).all():
        bad = int(frame.index[~cover.isin(range(1, 8))][0])
        raise DataError(f"covtype cover type outside 1..7 at line {bad + 1}")
    keep = cover.isin((2, 4, 5))
    kept = frame[keep]
    labels = kept.iloc[:, -1].isin((4, 5)).astype(int).to_numpy()
    features = kept.iloc[:, :-1].to_numpy(dtype=np.float64)
    _write_canonical(features, labels, [f"f{i}" for i in range(54)], out_path)


def _prepare_creditcard(raw_path: Path, out_path: Path) -> None:
    frame = pd.read_csv(raw_path)
    if "Class" not in frame.columns:
        raise DataError(f"creditcard raw file missing 'Class' column in {raw_path}")
    feature_cols = [c for c in frame.columns if c != "Class"]
    if len(feature_cols) != 30:
        raise DataError(
            f"creditcard raw file should have 30 feature columns, got {len(feature_cols)}")
    labels = frame["Class"].astype(int).to_numpy()
    if not np.isin(labels, (0, 1)).all():
        bad = int(np.flatnonzero(~np.isin(labels, (0, 1)))[0])
        raise DataError(f"creditcard Class outside {{0,1}} at line {bad + 2}")
    _write_canonical(frame[feature_cols].to_numpy(dtype=np.float64), labels,
                     feature_cols, out_path)


def _prepare_synth(out_path: Path, seed: int = 0) -> None:
    ds = make_clustered_fraud_dataset(n_samples=5000, anomaly_rate=0.05, seed=seed)
    _write_canonical(ds.features, ds.labels, ds.feature_names, out_path)


def prepare_dataset(name: str, raw_path: str | Path | None, out_path: str | Path) -> Dataset:
    """Emit the canonical CSV and return the recomputed descriptor's dataset."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if name == "synth":
        _prepare_synth(out_path)
    else:
        if raw_path is None:
            raise DataError(f"dataset {name!r} needs --raw pointing at the raw file")
        raw_path = Path(raw_path)
        if not raw_path.exists():
            raise DataError(f"raw file not found: {raw_path}")
        if name == "shuttle":
            _prepare_shuttle(raw_path, out_path)
        elif name == "covtype":
            _prepare_covtype(raw_path, out_path)
        elif name == "creditcard":
            _prepare_creditcard(raw_path, out_path)
        else:
            raise DataError(
                f"unknown dataset {name!r}; known: {', '.join(PREPARED_DATASETS)}")
    return load_dataset(out_path, "label", name=name)


def describe(dataset: Dataset) -> str:
    desc = dataset.descriptor()
    return (f"{desc.name}: {desc.n_samples} samples, {desc.dimension} feature columns "
            f"({desc.dimension + 1} with the label), "
            f"anomaly proportion {100 * desc.anomaly_proportion:.2f}%")
