"""Class-probability estimators fitted on the labeled pool.

Two backends: a random forest (default; p1 = fraction of per-tree hard votes,
dispersion = variance of the votes) and an L2-regularized logistic model
trained by full-batch gradient descent with Armijo backtracking, so the
training loss is non-increasing by construction and the analytic gradient is
checkable against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.ensemble import RandomForestClassifier
from sklearn.model_selection import StratifiedKFold

from .datapool import Dataset, DataError, PoolState

PROB_CLIP = 1e-9


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_leaf: int = 1
    features_per_split: str = "sqrt"
    vote_mode: str = "hard"  # "hard" = per-tree majority votes, "leaf_freq" = leaf frequencies


@dataclass(frozen=True)
class LogisticParams:
    l2_penalty: float = 1e-3
    max_iterations: int = 500
    tolerance: float = 1e-8


@dataclass(frozen=True)
class EstimatorConfig:
    kind: str = "random_forest"  # or "logistic"
    forest: ForestParams = field(default_factory=ForestParams)
    logistic: LogisticParams = field(default_factory=LogisticParams)
    seed: int = 0

    def validate(self) -> None:
        if self.kind not in ("random_forest", "logistic"):
            raise DataError(f"unknown estimator kind {self.kind!r}")
        if self.forest.n_trees < 1:
            raise DataError("n_trees must be >= 1")
        if self.forest.vote_mode not in ("hard", "leaf_freq"):
            raise DataError(f"unknown vote_mode {self.forest.vote_mode!r}")
        if self.logistic.l2_penalty < 0:
            raise DataError("l2_penalty must be >= 0")


@dataclass
class ProbabilityScores:
    row_ids: np.ndarray
    p1: np.ndarray
    dispersion: np.ndarray | None = None


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def cross_entropy(p1: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy with probability clipping."""
    p = np.clip(p1, PROB_CLIP, 1.0 - PROB_CLIP)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


def logistic_loss(theta: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float) -> float:
    """Regularized cross-entropy; theta = [coefficients..., intercept] (intercept unpenalized)."""
    w, b = theta[:-1], theta[-1]
    p = _sigmoid(X @ w + b)
    p = np.clip(p, PROB_CLIP, 1.0 - PROB_CLIP)
    nll = -np.sum(y * np.log(p) + (1 - y) * np.log(1 - p))
    return float(nll + 0.5 * l2 * np.dot(w, w))


def logistic_gradient(theta: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float) -> np.ndarray:
    w, b = theta[:-1], theta[-1]
    p = _sigmoid(X @ w + b)
    resid = p - y
    grad = np.empty_like(theta)
    grad[:-1] = X.T @ resid + l2 * w
    grad[-1] = resid.sum()
    return grad


def _fit_logistic(X: np.ndarray, y: np.ndarray, params: LogisticParams) -> tuple[np.ndarray, list[float]]:
    """Gradient descent with backtracking; returns theta and the per-iteration loss trace."""
    theta = np.zeros(X.shape[1] + 1)
    losses = [logistic_loss(theta, X, y, params.l2_penalty)]
    lipschitz = 0.25 * float((X * X).sum()) + params.l2_penalty + X.shape[0] * 0.25
    step = 1.0 / max(1.0, lipschitz)
    for _ in range(params.max_iterations):
        grad = logistic_gradient(theta, X, y, params.l2_penalty)
        gnorm2 = float(np.dot(grad, grad))
        if np.sqrt(gnorm2) < params.tolerance:
            break
        t = step
        cur = losses[-1]
        for _bt in range(60):
            cand = theta - t * grad
            cand_loss = logistic_loss(cand, X, y, params.l2_penalty)
            if cand_loss <= cur - 1e-4 * t * gnorm2:
                break
            t *= 0.5
        else:
            break  # no productive step remains
        theta = cand
        losses.append(cand_loss)
        step = min(t * 2.0, 1e6)  # let the step grow back
        if cur - cand_loss < params.tolerance * max(1.0, abs(cur)):
            break
    return theta, losses


class FittedEstimator:
    """Immutable trained model; predicts p(y=1|x) for any feature matrix."""

    def __init__(self, config: EstimatorConfig, trained_on_step: int, kind: str,
                 forest: RandomForestClassifier | None = None,
                 vote_luts: np.ndarray | None = None,
                 theta: np.ndarray | None = None,
                 loss_trace: list[float] | None = None):
        self.config = config
        self.trained_on_step = trained_on_step
        self.kind = kind
        self._forest = forest
        self._vote_luts = vote_luts  # list of per-tree leaf->value arrays
        self.theta = theta
        self.loss_trace = loss_trace or []

    def predict_p1(self, X: np.ndarray) -> np.ndarray:
        return self.predict_p1_dispersion(X)[0]

    def predict_p1_dispersion(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.kind == "logistic":
            w, b = self.theta[:-1], self.theta[-1]
            if X.shape[1] != w.shape[0]:
                raise DataError(f"dimension mismatch: model {w.shape[0]}, data {X.shape[1]}")
            return _sigmoid(X @ w + b), None
        if X.shape[1] != self._forest.n_features_in_:
            raise DataError(
                f"dimension mismatch: model {self._forest.n_features_in_}, data {X.shape[1]}"
            )
        leaves = self._forest.apply(X)  # (n, n_trees)
        per_tree = np.empty(leaves.shape, dtype=np.float64)
        for j, lut in enumerate(self._vote_luts):
            per_tree[:, j] = lut[leaves[:, j]]
        p1 = per_tree.mean(axis=1)
        dispersion = per_tree.var(axis=1)
        return p1, dispersion


def fit(pool: PoolState, dataset: Dataset, config: EstimatorConfig,
        step: int | None = None) -> FittedEstimator:
    """Fit on the revealed labels of the labeled pool. Deterministic per seed."""
    config.validate()
    ids = pool.labeled_array()
    labels = dataset.labels[ids]
    return fit_arrays(dataset.features[ids], labels, config,
                      step=pool.step if step is None else step)


def fit_arrays(X: np.ndarray, y: np.ndarray, config: EstimatorConfig,
               step: int = 0) -> FittedEstimator:
    """Fit from explicit arrays (used with oracle-revealed labels)."""
    config.validate()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    classes = np.unique(y)
    if classes.shape[0] < 2:
        raise DataError(f"single-class labeled pool (all {int(classes[0])}); cannot fit")
    if config.kind == "logistic":
        theta, losses = _fit_logistic(X, y.astype(np.float64), config.logistic)
        return FittedEstimator(config, step, "logistic", theta=theta, loss_trace=losses)
    fp = config.forest
    forest = RandomForestClassifier(
        n_estimators=fp.n_trees,
        max_depth=fp.max_depth,
        min_samples_leaf=fp.min_leaf,
        max_features=fp.features_per_split,
        random_state=config.seed,
        n_jobs=1,
    ).fit(X, y)
    pos_col = int(np.argmax(forest.classes_ == 1))
    luts = []
    for tree in forest.estimators_:
        freq = tree.tree_.value[:, 0, :]  # normalized class frequencies per node
        if fp.vote_mode == "hard":
            luts.append((np.argmax(freq, axis=1) == pos_col).astype(np.float64))
        else:
            luts.append(freq[:, pos_col].astype(np.float64))
    return FittedEstimator(config, step, "random_forest", forest=forest, vote_luts=luts)


def predict_scores(est: FittedEstimator, dataset: Dataset,
                   row_ids: np.ndarray) -> ProbabilityScores:
    row_ids = np.asarray(row_ids, dtype=np.int64)
    p1, dispersion = est.predict_p1_dispersion(dataset.features[row_ids])
    return ProbabilityScores(row_ids=row_ids, p1=p1, dispersion=dispersion)


@dataclass
class CvSelection:
    config: EstimatorConfig
    mean_losses: list[float]
    fallback: bool = False


def cv_select(pool: PoolState, dataset: Dataset, grid: list[EstimatorConfig],
              k_folds: int = 3, seed: int = 0) -> CvSelection:
    """Pick the grid entry with the best mean validation cross-entropy.

    Ties go to the earlier grid entry. If stratified folds are infeasible
    (fewer than k_folds rows in either class) the first entry is returned
    with the fallback flag set.
    """
    if not grid:
        raise DataError("empty estimator grid")
    ids = pool.labeled_array()
    X, y = dataset.features[ids], dataset.labels[ids]
    n_pos = int(np.count_nonzero(y == 1))
    n_neg = int(np.count_nonzero(y == 0))
    if min(n_pos, n_neg) < k_folds or k_folds < 2:
        return CvSelection(config=grid[0], mean_losses=[], fallback=True)
    folds = StratifiedKFold(n_splits=k_folds, shuffle=True, random_state=seed)
    mean_losses = []
    for config in grid:
        losses = []
        for train_idx, val_idx in folds.split(X, y):
            est = fit_arrays(X[train_idx], y[train_idx], config)
            p1 = est.predict_p1(X[val_idx])
            losses.append(cross_entropy(p1, y[val_idx]))
        mean_losses.append(float(np.mean(losses)))
    best = int(np.argmin(mean_losses))  # argmin keeps the first of ties
    return CvSelection(config=grid[best], mean_losses=mean_losses, fallback=False)


def default_cv_grid(base: EstimatorConfig) -> list[EstimatorConfig]:
    """Small forest grid: trees in {50,100} x min_leaf in {1,5}."""
    from dataclasses import replace
    grid = []
    for n_trees in (50, 100):
        for min_leaf in (1, 5):
            grid.append(replace(base, forest=replace(base.forest, n_trees=n_trees,
                                                     min_leaf=min_leaf)))
    return grid
