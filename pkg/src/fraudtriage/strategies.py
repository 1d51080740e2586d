"""Query strategies emitting advice vectors over the unlabeled pool.

An advice vector is a probability distribution over the current unlabeled
rows (canonical ascending row order). Deterministic strategies emit one-hot
vectors so the meta-loop can sample every strategy the same way; ties break
to the lowest row_id.

The `advise_*` functions take an estimator and score the pool themselves;
the `*_from_scores` primitives take precomputed p1 so the run loop can reuse
one prediction pass per refit across all strategies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datapool import Dataset, DataError, PoolState
from .estimator import FittedEstimator

ADVICE_SUM_TOL = 1e-9

STRATEGY_NAMES = ("base", "base_refit", "random", "us",
                  "lal_independent", "lal_iterative", "albl")


@dataclass(frozen=True)
class AdviceVector:
    row_ids: np.ndarray
    probs: np.ndarray

    def validate(self) -> None:
        if self.row_ids.shape != self.probs.shape:
            raise DataError("advice row_ids and probs misaligned")
        if self.row_ids.shape[0] == 0:
            raise DataError("advice over empty pool")
        if np.any(self.probs < 0):
            raise DataError("advice contains negative probabilities")
        if abs(float(self.probs.sum()) - 1.0) > ADVICE_SUM_TOL:
            raise DataError(f"advice probabilities sum to {self.probs.sum()}, not 1")


def one_hot_advice(row_ids: np.ndarray, index: int) -> AdviceVector:
    probs = np.zeros(row_ids.shape[0])
    probs[index] = 1.0
    return AdviceVector(row_ids=row_ids, probs=probs)


def _pool_rows(pool: PoolState) -> np.ndarray:
    if pool.n_unlabeled == 0:
        raise DataError("no unlabeled rows left to advise on")
    return pool.unlabeled


def greedy_from_scores(p1: np.ndarray, pool: PoolState) -> AdviceVector:
    """One-hot on the highest estimated fraud probability.

    np.argmax returns the first maximum, which in ascending row order is the
    lowest row_id.
    """
    rows = _pool_rows(pool)
    if p1.shape[0] != rows.shape[0]:
        raise DataError("scores misaligned with unlabeled pool")
    return one_hot_advice(rows, int(np.argmax(p1)))


def uncertainty_from_scores(p1: np.ndarray, pool: PoolState) -> AdviceVector:
    """One-hot on the row minimizing |p(y=1|x) - p(y=0|x)| = |2*p1 - 1|."""
    rows = _pool_rows(pool)
    if p1.shape[0] != rows.shape[0]:
        raise DataError("scores misaligned with unlabeled pool")
    return one_hot_advice(rows, int(np.argmin(np.abs(2.0 * p1 - 1.0))))


def advise_from_values(values: np.ndarray, pool: PoolState) -> AdviceVector:
    """One-hot on the row with the highest score (first max wins ties)."""
    rows = _pool_rows(pool)
    if values.shape[0] != rows.shape[0]:
        raise DataError("values misaligned with unlabeled pool")
    return one_hot_advice(rows, int(np.argmax(values)))


def advise_greedy(est: FittedEstimator, pool: PoolState, dataset: Dataset) -> AdviceVector:
    rows = _pool_rows(pool)
    return greedy_from_scores(est.predict_p1(dataset.features[rows]), pool)


def advise_random(pool: PoolState) -> AdviceVector:
    """Uniform distribution over the unlabeled pool."""
    rows = _pool_rows(pool)
    n = rows.shape[0]
    return AdviceVector(row_ids=rows, probs=np.full(n, 1.0 / n))


def advise_uncertainty(est: FittedEstimator, pool: PoolState, dataset: Dataset) -> AdviceVector:
    rows = _pool_rows(pool)
    return uncertainty_from_scores(est.predict_p1(dataset.features[rows]), pool)
