"""Clamped multiplicative-weights mixing of query strategies (CAFDA).

Maintains a probability vector w over K strategies. Each step: pick a
strategy ~ w, sample its advised row, observe the fraud reward, then apply
the three-stage heuristic update: multiplicative step on the chosen entry
(up by k1 on reward, down by k0 otherwise, clamped to [p_min, p_max]), clamp
the other entries into [p_min, p_max], and renormalize.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datapool import DataError
from .strategies import AdviceVector

WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class CafdaConfig:
    k0: float = 0.8
    k1: float = 1.2
    p_min: float = 0.001
    p_max: float = 0.95

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not 0.0 < self.k0 < 1.0:
            raise DataError(f"k0 must be in (0,1), got {self.k0}")
        if self.k1 <= 1.0:
            raise DataError(f"k1 must be > 1, got {self.k1}")
        if not 0.0 < self.p_min < self.p_max <= 1.0:
            raise DataError(f"need 0 < p_min < p_max <= 1, got {self.p_min}, {self.p_max}")


def init_weights(k: int) -> np.ndarray:
    """Uniform initial strategy-pick probabilities, w_i = 1/k."""
    if k < 1:
        raise DataError("need at least one strategy")
    return np.full(k, 1.0 / k)


def check_weights(w: np.ndarray) -> None:
    if np.any(w <= 0):
        raise DataError("weights must be strictly positive")
    if abs(float(w.sum()) - 1.0) > WEIGHT_SUM_TOL:
        raise DataError(f"weights sum to {w.sum()}, not 1")


def _inverse_cdf(probs: np.ndarray, u: float) -> int:
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, u, side="right"))
    return min(idx, probs.shape[0] - 1)


def pick_strategy(w: np.ndarray, rng: np.random.Generator) -> int:
    """Sample a strategy index ~ w by inverse CDF. Always consumes one draw."""
    check_weights(w)
    return _inverse_cdf(w, rng.random())


def sample_query(advice: AdviceVector, rng: np.random.Generator) -> int:
    """Sample a row from the advice distribution by inverse CDF (one draw)."""
    advice.validate()
    idx = _inverse_cdf(advice.probs, rng.random())
    return int(advice.row_ids[idx])


def update_weights(w: np.ndarray, chosen: int, reward: float,
                   config: CafdaConfig) -> np.ndarray:
    """Three-stage heuristic update; returns the normalized weight vector.

    A real-valued reward takes the reward branch iff it is > 0. Input weight
    validity is a precondition (this sits in the per-step hot loop).
    """
    if not 0 <= chosen < w.shape[0]:
        raise DataError(f"chosen index {chosen} out of range for {w.shape[0]} strategies")
    if reward > 0:
        updated = min(config.k1 * w[chosen], config.p_max)
    else:
        updated = max(config.k0 * w[chosen], config.p_min)
    out = np.clip(w, config.p_min, config.p_max)  # stage 2, every j != chosen
    out[chosen] = updated
    # Reachable states keep every pre-normalization entry inside the clamp band;
    # localize any future variant that breaks this.
    assert config.p_min - 1e-15 <= out[chosen] <= config.p_max + 1e-15, \
        "pre-normalization weight escaped [p_min, p_max]"
    return out / out.sum()
