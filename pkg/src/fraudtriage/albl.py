"""Bandit over unitary strategies, rewarded by labeled-pool accuracy.

Exponential weights over a small arm pool (uncertainty + random by default).
The advice is the weight-mixture of the arms' advice vectors; after each
revealed label, arm weights update from an importance-weighted accuracy
estimate: the queried row's accuracy indicator scaled by the inverse of the
probability with which the mixture proposed it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .datapool import DataError, PoolState
from .strategies import AdviceVector, advise_random, uncertainty_from_scores

DEFAULT_ARMS = ("us", "random")


@dataclass(frozen=True)
class AlblConfig:
    arms: tuple[str, ...] = DEFAULT_ARMS
    eta: float = 0.5        # exponential-weights learning rate
    gamma: float = 0.1      # exploration floor on arm probabilities

    def validate(self) -> None:
        if not self.arms:
            raise DataError("ALBL needs at least one arm")
        for arm in self.arms:
            if arm not in ("us", "random"):
                raise DataError(f"unknown ALBL arm {arm!r}")


@dataclass(frozen=True)
class AlblState:
    config: AlblConfig
    log_weights: np.ndarray
    # advice bookkeeping for the importance-weighted update
    last_rows: np.ndarray | None = None
    last_mixture: np.ndarray | None = None
    last_arm_probs: np.ndarray | None = None  # (n_arms, n_unlabeled)

    @classmethod
    def fresh(cls, config: AlblConfig) -> "AlblState":
        config.validate()
        return cls(config=config, log_weights=np.zeros(len(config.arms)))

    def arm_probabilities(self) -> np.ndarray:
        lw = self.log_weights - self.log_weights.max()
        w = np.exp(lw)
        w /= w.sum()
        k = w.shape[0]
        return (1.0 - self.config.gamma) * w + self.config.gamma / k


def importance_weighted_reward(accuracy: float, sample_prob: float) -> float:
    """Unbiased per-step accuracy estimate: indicator scaled by 1/q."""
    if sample_prob <= 0:
        raise DataError("sampled a row the mixture gave zero probability")
    return accuracy / sample_prob


def _arm_advice(arm: str, p1: np.ndarray | None, pool: PoolState) -> AdviceVector:
    if arm == "random":
        return advise_random(pool)
    if p1 is None:
        raise DataError("uncertainty arm needs estimator scores")
    return uncertainty_from_scores(p1, pool)


def advise_albl(state: AlblState, p1: np.ndarray | None,
                pool: PoolState) -> tuple[AdviceVector, AlblState]:
    """Mix arm advice by the current arm probabilities."""
    probs = state.arm_probabilities()
    arm_vectors = [_arm_advice(arm, p1, pool) for arm in state.config.arms]
    rows = arm_vectors[0].row_ids
    arm_probs = np.stack([v.probs for v in arm_vectors])
    mixture = probs @ arm_probs
    mixture /= mixture.sum()  # guard accumulated float error
    advice = AdviceVector(row_ids=rows, probs=mixture)
    return advice, replace(state, last_rows=rows, last_mixture=mixture,
                           last_arm_probs=arm_probs)


def update_albl(state: AlblState, row_id: int, label: int,
                predicted_label: int) -> AlblState:
    """Credit each arm by its advice mass on the queried row.

    The internal reward is the accuracy indicator of the current model on the
    queried row, importance-weighted by 1/q where q is the mixture probability
    that proposed it, and normalized by the pool size so rewards stay O(1).
    """
    if state.last_rows is None:
        return state
    idx = int(np.searchsorted(state.last_rows, row_id))
    if idx >= state.last_rows.shape[0] or state.last_rows[idx] != row_id:
        return state  # row was proposed by some other expert; nothing to credit
    n = state.last_rows.shape[0]
    accuracy = 1.0 if int(predicted_label) == int(label) else 0.0
    r_hat = importance_weighted_reward(accuracy, float(state.last_mixture[idx])) / n
    per_arm = state.last_arm_probs[:, idx] * r_hat
    log_weights = state.log_weights + state.config.eta * per_arm
    log_weights = log_weights - log_weights.max()  # keep exponents bounded
    return replace(state, log_weights=log_weights,
                   last_rows=None, last_mixture=None, last_arm_probs=None)
