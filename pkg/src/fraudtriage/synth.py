"""Synthetic imbalanced tasks: a large normal cloud with clustered frauds."""

from __future__ import annotations

import numpy as np

from .datapool import Dataset


def make_clustered_fraud_dataset(n_samples: int = 5000, anomaly_rate: float = 0.05,
                                 dimension: int = 2, separation: float = 4.0,
                                 fraud_spread: float = 0.35, seed: int = 0,
                                 name: str = "synth") -> Dataset:
    """Two Gaussian classes: negatives N(0, I), positives tight around one mode.

    Clustered frauds make exploitation pay off once a few are found, mirroring
    card-fraud pools where fraudulent behavior concentrates.
    """
    rng = np.random.default_rng(seed)
    n_pos = max(1, int(round(anomaly_rate * n_samples)))
    n_neg = n_samples - n_pos
    direction = np.zeros(dimension)
    direction[0] = 1.0
    X = np.concatenate([
        rng.normal(size=(n_neg, dimension)),
        rng.normal(size=(n_pos, dimension)) * fraud_spread + separation * direction,
    ])
    y = np.concatenate([np.zeros(n_neg, dtype=np.int64), np.ones(n_pos, dtype=np.int64)])
    perm = rng.permutation(n_samples)
    return Dataset(name=name, features=X[perm], labels=y[perm])


def make_planted_pool(labels: np.ndarray, dimension: int = 2, seed: int = 0,
                      name: str = "planted") -> Dataset:
    """Dataset with caller-chosen labels and generic Gaussian features."""
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(labels.shape[0], dimension))
    X[labels == 1] += 3.0  # keep classes learnable
    return Dataset(name=name, features=X, labels=labels)
