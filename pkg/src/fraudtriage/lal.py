"""Learned query scoring: a regressor trained on simulated labeling runs.

A Monte Carlo procedure generates (state, candidate) -> loss-improvement
examples on synthetic two-Gaussian tasks; a forest regressor fitted on them
predicts, at deployment time, how much each unlabeled row would improve the
estimator. Two generation modes: `independent` draws every simulated query
at random; `iterative` lets the partially-trained regressor pick the
simulated queries itself, so the training distribution tracks the
deployment one.

Features, in column order: labeled-set size, labeled positive fraction,
mean p1 over the unlabeled pool, mean vote dispersion over the unlabeled
pool, candidate p1, candidate dispersion, candidate distance to the nearest
labeled positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.ensemble import RandomForestRegressor

from .datapool import DataError
from .estimator import EstimatorConfig, ForestParams, cross_entropy, fit_arrays

N_FEATURES = 7
FAR_DISTANCE = 1e6  # stands in for "no labeled positive yet"


@dataclass(frozen=True)
class LalConfig:
    budget: int = 150
    task_samples: int = 120
    task_dim: int = 2
    pos_frac_low: float = 0.1
    pos_frac_high: float = 0.4
    separation_low: float = 1.0
    separation_high: float = 3.0
    val_fraction: float = 0.3
    min_labeled: int = 8
    max_labeled: int = 40
    sim_trees: int = 15
    sim_estimator_kind: str = "random_forest"
    regressor_trees: int = 50
    seq_length: int = 10     # iterative mode: queries per simulated run
    warm_start: int = 30     # iterative mode: random rows before the regressor takes over
    refit_every: int = 25


@dataclass
class LalTrainingSet:
    features: np.ndarray  # (budget, N_FEATURES)
    improvements: np.ndarray  # (budget,)


def state_point_features(n_labeled: int, pos_frac: float, mean_p1: float,
                         mean_disp: float, cand_p1: np.ndarray,
                         cand_disp: np.ndarray, cand_dist: np.ndarray) -> np.ndarray:
    """Stack state features (broadcast) with per-candidate point features."""
    n = cand_p1.shape[0]
    out = np.empty((n, N_FEATURES))
    out[:, 0] = n_labeled
    out[:, 1] = pos_frac
    out[:, 2] = mean_p1
    out[:, 3] = mean_disp
    out[:, 4] = cand_p1
    out[:, 5] = cand_disp
    out[:, 6] = cand_dist
    return out


def distance_to_nearest_positive(points: np.ndarray, positives: np.ndarray) -> np.ndarray:
    if positives.shape[0] == 0:
        return np.full(points.shape[0], FAR_DISTANCE)
    diff = points[:, None, :] - positives[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2)).min(axis=1)


def _sample_task(rng: np.random.Generator, cfg: LalConfig) -> tuple[np.ndarray, np.ndarray]:
    n = cfg.task_samples
    pos_frac = rng.uniform(cfg.pos_frac_low, cfg.pos_frac_high)
    n_pos = max(2, int(round(pos_frac * n)))
    sep = rng.uniform(cfg.separation_low, cfg.separation_high)
    direction = rng.normal(size=cfg.task_dim)
    direction /= np.linalg.norm(direction)
    X = np.concatenate([
        rng.normal(size=(n - n_pos, cfg.task_dim)),
        rng.normal(size=(n_pos, cfg.task_dim)) * 0.7 + sep * direction,
    ])
    y = np.concatenate([np.zeros(n - n_pos, dtype=np.int64), np.ones(n_pos, dtype=np.int64)])
    perm = rng.permutation(n)
    return X[perm], y[perm]


def _sim_estimator_config(cfg: LalConfig, seed: int) -> EstimatorConfig:
    return EstimatorConfig(
        kind=cfg.sim_estimator_kind,
        forest=ForestParams(n_trees=cfg.sim_trees),
        seed=seed,
    )


def _labeled_with_both_classes(rng: np.random.Generator, y: np.ndarray,
                               pool_idx: np.ndarray, m: int) -> np.ndarray:
    for _ in range(50):
        chosen = rng.choice(pool_idx, size=m, replace=False)
        if 0 < np.count_nonzero(y[chosen]) < m:
            return chosen
    raise DataError("degenerate synthetic task: cannot draw a two-class labeled set")


class _SimTask:
    """One synthetic task with a held-in validation split and a labeled subset."""

    def __init__(self, rng: np.random.Generator, cfg: LalConfig, seed_iter):
        self.cfg = cfg
        self.seed_iter = seed_iter
        X, y = _sample_task(rng, cfg)
        n_val = max(10, int(cfg.val_fraction * X.shape[0]))
        self.X_val, self.y_val = X[:n_val], y[:n_val]
        self.X_pool, self.y_pool = X[n_val:], y[n_val:]
        if len(np.unique(self.y_pool)) < 2 or len(np.unique(self.y_val)) < 2:
            raise DataError("degenerate synthetic task (single class)")
        m = int(rng.integers(cfg.min_labeled, cfg.max_labeled + 1))
        m = min(m, self.X_pool.shape[0] - 2)
        pool_idx = np.arange(self.X_pool.shape[0])
        self.labeled = list(_labeled_with_both_classes(rng, self.y_pool, pool_idx, m))
        self.est = None
        self.val_loss = None
        self.refit()

    def refit(self) -> None:
        cfg_e = _sim_estimator_config(self.cfg, next(self.seed_iter))
        self.est = fit_arrays(self.X_pool[self.labeled], self.y_pool[self.labeled], cfg_e)
        self.val_loss = cross_entropy(self.est.predict_p1(self.X_val), self.y_val)

    def unlabeled_indices(self) -> np.ndarray:
        mask = np.ones(self.X_pool.shape[0], dtype=bool)
        mask[self.labeled] = False
        return np.flatnonzero(mask)

    def candidate_features(self, cand_idx: np.ndarray) -> np.ndarray:
        unl = self.unlabeled_indices()
        p1_u, disp_u = self.est.predict_p1_dispersion(self.X_pool[unl])
        if disp_u is None:
            disp_u = np.zeros_like(p1_u)
        pos = np.asarray(self.labeled)[self.y_pool[self.labeled] == 1]
        cand_p1, cand_disp = self.est.predict_p1_dispersion(self.X_pool[cand_idx])
        if cand_disp is None:
            cand_disp = np.zeros_like(cand_p1)
        dist = distance_to_nearest_positive(self.X_pool[cand_idx], self.X_pool[pos])
        lab_y = self.y_pool[self.labeled]
        return state_point_features(
            len(self.labeled), float(np.mean(lab_y)), float(np.mean(p1_u)),
            float(np.mean(disp_u)), cand_p1, cand_disp, dist,
        )

    def add_and_measure(self, cand_idx: int) -> float:
        """Add the candidate, refit, and return the validation-loss improvement."""
        before = self.val_loss
        self.labeled.append(int(cand_idx))
        self.refit()
        return float(before - self.val_loss)


def improvement_of_candidate(X_pool, y_pool, labeled, cand_idx, X_val, y_val,
                             config: EstimatorConfig, config_after: EstimatorConfig | None = None):
    """Measure the validation cross-entropy change from one extra labeled row.

    Standalone refit comparison (the oracle the training set is built from).
    """
    est = fit_arrays(X_pool[labeled], y_pool[labeled], config)
    before = cross_entropy(est.predict_p1(X_val), y_val)
    grown = list(labeled) + [int(cand_idx)]
    est2 = fit_arrays(X_pool[grown], y_pool[grown], config_after or config)
    after = cross_entropy(est2.predict_p1(X_val), y_val)
    return before - after


def build_lal_training_set(mode: str, config: LalConfig, seed: int) -> LalTrainingSet:
    """Simulate labeling runs and collect (features -> loss improvement) rows."""
    if mode not in ("independent", "iterative"):
        raise DataError(f"unknown LAL mode {mode!r}")
    if config.budget < 1:
        raise DataError("simulation budget must be >= 1")
    rng = np.random.default_rng(seed)
    seed_iter = iter(lambda: int(rng.integers(2**31 - 1)), None)

    rows_X: list[np.ndarray] = []
    rows_y: list[float] = []
    partial: RandomForestRegressor | None = None
    last_refit = 0

    while len(rows_y) < config.budget:
        task = None
        for _attempt in range(20):
            try:
                task = _SimTask(rng, config, seed_iter)
                break
            except DataError:
                continue
        if task is None:
            raise DataError("degenerate synthetic task family (single class)")
        seq = config.seq_length if mode == "iterative" else 1
        for _ in range(seq):
            if len(rows_y) >= config.budget:
                break
            unl = task.unlabeled_indices()
            if unl.shape[0] == 0:
                break
            if mode == "independent" or partial is None or len(rows_y) < config.warm_start:
                cand = int(rng.choice(unl))
            else:
                feats = task.candidate_features(unl)
                cand = int(unl[int(np.argmax(partial.predict(feats)))])
            feats_cand = task.candidate_features(np.array([cand]))
            improvement = task.add_and_measure(cand)
            rows_X.append(feats_cand[0])
            rows_y.append(improvement)
            if (mode == "iterative" and len(rows_y) - last_refit >= config.refit_every):
                partial = _fit_regressor(np.array(rows_X), np.array(rows_y),
                                         config, next(seed_iter))
                last_refit = len(rows_y)

    features = np.array(rows_X)
    improvements = np.array(rows_y)
    if not np.all(np.isfinite(features)) or not np.all(np.isfinite(improvements)):
        raise DataError("non-finite values in LAL training set")
    return LalTrainingSet(features=features, improvements=improvements)


def _fit_regressor(X: np.ndarray, y: np.ndarray, config: LalConfig,
                   seed: int) -> RandomForestRegressor:
    return RandomForestRegressor(
        n_estimators=config.regressor_trees, random_state=seed, n_jobs=1,
    ).fit(X, y)


class LalModel:
    """Fitted improvement regressor."""

    def __init__(self, regressor: RandomForestRegressor):
        self._regressor = regressor

    def predict(self, features: np.ndarray) -> np.ndarray:
        return self._regressor.predict(features)


def fit_lal_model(training: LalTrainingSet, config: LalConfig, seed: int) -> LalModel:
    if training.features.shape[0] == 0:
        raise DataError("empty LAL training set")
    return LalModel(_fit_regressor(training.features, training.improvements, config, seed))


def advise_lal(model, features: np.ndarray, pool):
    """One-hot advice on the unlabeled row with the highest predicted improvement."""
    from .strategies import advise_from_values
    if model is None:
        raise DataError("LAL regressor not fitted")
    return advise_from_values(np.asarray(model.predict(features)), pool)
