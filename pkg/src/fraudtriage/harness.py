"""Run engine: drive any strategy (or the CAFDA mixture) against an oracle.

A run advances in two phases so the same engine serves simulated sweeps and
the interactive service: `propose()` picks a strategy and samples its advised
row; `complete(row_id, label)` books the reward, moves the row into the
labeled pool, updates mixture weights, and refreshes the estimators.

Scenario 1 runs the configured strategy for the whole horizon. Scenario 2
runs it for `switch_step` steps, then queries the highest estimated fraud
probability under the classifier resulting from the prefix (frozen at the
switch unless `refit_after_switch` is set).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from . import estimator as est_mod
from .albl import AlblConfig, AlblState, advise_albl, update_albl
from .cafda import CafdaConfig, init_weights, pick_strategy, sample_query, update_weights
from .datapool import (DataError, Dataset, LabelOracle, SimulatedOracle,
                       SplitConfig, initial_split, move_to_labeled)
from .estimator import EstimatorConfig, FittedEstimator
from .lal import (LalConfig, advise_lal, build_lal_training_set,
                  distance_to_nearest_positive, fit_lal_model, state_point_features)
from .strategies import (AdviceVector, advise_random, greedy_from_scores,
                         uncertainty_from_scores)

DEFAULT_EXPERTS = ("base", "base_refit", "random", "lal_independent", "lal_iterative")
ALL_STRATEGIES = ("base", "base_refit", "random", "us",
                  "lal_independent", "lal_iterative", "albl", "cafda")

_NEEDS_CURRENT = {"base_refit", "us", "lal_independent", "lal_iterative", "albl"}


@dataclass(frozen=True)
class RewardSpec:
    kind: str = "unitary"  # or "monetary"
    amount_column: str | None = None
    amount_index: int | None = None

    def resolve(self, feature_names: list[str]) -> "RewardSpec":
        if self.kind == "unitary":
            return self
        if self.kind != "monetary":
            raise DataError(f"unknown reward kind {self.kind!r}")
        if not self.amount_column:
            raise DataError("monetary reward needs an amount column")
        if self.amount_column not in feature_names:
            raise DataError(f"amount column {self.amount_column!r} not in dataset")
        return replace(self, amount_index=feature_names.index(self.amount_column))


def compute_reward(label: int, spec: RewardSpec, record=None):
    """Reward for showing one transaction to the oracle.

    Unitary: 1 iff the revealed label is fraud (querying a row amounts to
    predicting it fraudulent). Monetary: the transaction amount iff fraud.
    """
    if label not in (0, 1):
        raise DataError(f"label must be 0 or 1, got {label!r}")
    if spec.kind == "unitary":
        return int(label == 1)
    if spec.amount_index is None:
        raise DataError("monetary reward spec not resolved against a dataset")
    if label != 1:
        return 0.0
    return float(record.features[spec.amount_index])


@dataclass(frozen=True)
class RunSpec:
    strategy: str = "cafda"
    experts: tuple[str, ...] = DEFAULT_EXPERTS
    scenario: int = 1
    horizon: int = 100
    switch_step: int = 100
    refit_after_switch: bool = False
    seed: int = 0
    split: SplitConfig = field(default_factory=SplitConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    cafda: CafdaConfig = field(default_factory=CafdaConfig)
    lal: LalConfig = field(default_factory=LalConfig)
    albl: AlblConfig = field(default_factory=AlblConfig)
    reward: RewardSpec = field(default_factory=RewardSpec)
    cv: bool = False
    cv_folds: int = 3

    def expert_names(self) -> tuple[str, ...]:
        if self.strategy == "cafda":
            if not self.experts:
                raise DataError("cafda needs a non-empty expert pool")
            return tuple(self.experts)
        if self.strategy not in ALL_STRATEGIES:
            raise DataError(f"unknown strategy {self.strategy!r}")
        return (self.strategy,)

    def validate(self) -> None:
        if self.scenario not in (1, 2):
            raise DataError(f"scenario must be 1 or 2, got {self.scenario}")
        if self.horizon < 1:
            raise DataError("horizon must be >= 1")
        if self.scenario == 2 and self.switch_step >= self.horizon:
            raise DataError("scenario 2 needs switch_step < horizon")
        self.cafda.validate()
        for name in self.expert_names():
            if name not in ALL_STRATEGIES or name == "cafda":
                raise DataError(f"unknown expert {name!r}")


@dataclass
class StepRecord:
    t: int
    strategy: str
    row_id: int
    label: int
    reward: float
    cum_reward: float
    weights: list[float] | None = None

    def to_json(self) -> str:
        payload = {"t": self.t, "strategy": self.strategy, "row_id": self.row_id,
                   "label": self.label, "reward": self.reward,
                   "cum_reward": self.cum_reward}
        if self.weights is not None:
            payload["weights"] = self.weights
        return json.dumps(payload)


def jsonl_lines(records: list[StepRecord]) -> str:
    return "".join(rec.to_json() + "\n" for rec in records)


@dataclass
class PendingQuery:
    t: int
    strategy: str
    row_id: int
    p1: float | None


@dataclass
class RunResult:
    strategy: str
    seed: int
    records: list[StepRecord]
    final_labeled: list[int]
    truncated: bool
    duration_s: float

    def cumulative(self) -> np.ndarray:
        return np.array([rec.cum_reward for rec in self.records], dtype=np.float64)


class TriageRun:
    """One sequential run: strategy state, pool, estimators, weights."""

    def __init__(self, dataset: Dataset, spec: RunSpec):
        spec.validate()
        self.dataset = dataset
        self.spec = spec
        self.reward_spec = spec.reward.resolve(dataset.feature_names)

        streams = np.random.SeedSequence(spec.seed).spawn(7)
        self._rng_picks = np.random.default_rng(streams[1])
        self._rng_queries = np.random.default_rng(streams[2])
        self._rng_est_seeds = np.random.default_rng(streams[3])
        self._lal_streams = {"lal_independent": streams[4], "lal_iterative": streams[5]}

        split = spec.split
        if split.seed is None:
            split = replace(split, seed=int(np.random.default_rng(streams[0]).integers(2**31 - 1)))
        self.pool = initial_split(dataset, split)
        self.revealed: dict[int, int] = {
            int(r): int(dataset.labels[r]) for r in self.pool.labeled
        }
        self._active_sorted = self.pool.active_ids()
        self.horizon = min(spec.horizon, self.pool.n_unlabeled)
        self.truncated_horizon = self.horizon < spec.horizon

        self.estimator_config = spec.estimator
        if spec.cv:
            selection = est_mod.cv_select(
                self.pool, dataset, est_mod.default_cv_grid(spec.estimator),
                k_folds=spec.cv_folds, seed=self._next_est_seed())
            self.estimator_config = selection.config

        # Scenario 2 with an empty prefix is exploitation from the very start:
        # no expert machinery is initialized at all.
        self._exploit_only = spec.scenario == 2 and spec.switch_step == 0
        self.experts = () if self._exploit_only else spec.expert_names()
        self.weights = init_weights(max(1, len(self.experts)))
        self._log_weights = spec.strategy == "cafda" and len(self.experts) > 1

        self._needs_frozen = "base" in self.experts
        self._needs_current = any(e in _NEEDS_CURRENT for e in self.experts)
        self.frozen_estimator: FittedEstimator | None = None
        self._frozen_p1: np.ndarray | None = None  # over active ids, fixed order
        self.current_estimator: FittedEstimator | None = None
        self._current_unl: tuple[np.ndarray, np.ndarray] | None = None  # (p1, disp)
        self.exploit_estimator: FittedEstimator | None = None
        self._exploit_p1: np.ndarray | None = None

        if self._needs_frozen:
            self.frozen_estimator = self._fit_estimator()
            self._frozen_p1 = self.frozen_estimator.predict_p1(
                dataset.features[self._active_sorted])
        if self._needs_current:
            self._refit_current()

        self.lal_models = {}
        self._dist_to_positive: np.ndarray | None = None
        for mode in ("lal_independent", "lal_iterative"):
            if mode in self.experts:
                sub = self._lal_streams[mode].spawn(2)
                training = build_lal_training_set(
                    mode.removeprefix("lal_"), spec.lal,
                    seed=int(np.random.default_rng(sub[0]).integers(2**31 - 1)))
                self.lal_models[mode] = fit_lal_model(
                    training, spec.lal,
                    seed=int(np.random.default_rng(sub[1]).integers(2**31 - 1)))
        if self.lal_models:
            self._init_distances()

        self.albl_state = AlblState.fresh(spec.albl) if "albl" in self.experts else None

        self.records: list[StepRecord] = []
        self.cum_reward = 0 if self.reward_spec.kind == "unitary" else 0.0
        self.pending: PendingQuery | None = None
        self._pending_expert: int | None = None
        self.started = time.perf_counter()

        if self._exploit_only:
            self._enter_exploit_phase()

    # ----- estimator plumbing -------------------------------------------------

    def _next_est_seed(self) -> int:
        return int(self._rng_est_seeds.integers(2**31 - 1))

    def _labeled_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        ids = self.pool.labeled_array()
        y = np.array([self.revealed[int(r)] for r in ids], dtype=np.int64)
        return self.dataset.features[ids], y

    def _fit_estimator(self) -> FittedEstimator:
        X, y = self._labeled_arrays()
        config = replace(self.estimator_config, seed=self._next_est_seed())
        return est_mod.fit_arrays(X, y, config, step=self.pool.step)

    def _refit_current(self) -> None:
        self.current_estimator = self._fit_estimator()
        self._current_unl = None

    def _current_scores(self) -> tuple[np.ndarray, np.ndarray]:
        if self._current_unl is None:
            p1, disp = self.current_estimator.predict_p1_dispersion(
                self.dataset.features[self.pool.unlabeled])
            if disp is None:
                disp = np.zeros_like(p1)
            self._current_unl = (p1, disp)
        return self._current_unl

    def _frozen_unlabeled_p1(self) -> np.ndarray:
        pos = np.searchsorted(self._active_sorted, self.pool.unlabeled)
        return self._frozen_p1[pos]

    def _exploit_unlabeled_p1(self) -> np.ndarray:
        if self.spec.refit_after_switch:
            return self._current_scores()[0]
        pos = np.searchsorted(self._active_sorted, self.pool.unlabeled)
        return self._exploit_p1[pos]

    def _enter_exploit_phase(self) -> None:
        self.exploit_estimator = self._fit_estimator()
        if self.spec.refit_after_switch:
            self.current_estimator = self.exploit_estimator
            self._current_unl = None
        else:
            self._exploit_p1 = self.exploit_estimator.predict_p1(
                self.dataset.features[self._active_sorted])

    # ----- LAL plumbing -------------------------------------------------------

    def _init_distances(self) -> None:
        pos_ids = [r for r, lab in self.revealed.items() if lab == 1]
        self._dist_to_positive = distance_to_nearest_positive(
            self.dataset.features[self._active_sorted],
            self.dataset.features[np.array(pos_ids, dtype=np.int64)]
            if pos_ids else np.empty((0, self.dataset.dimension)))

    def _update_distances(self, row_id: int) -> None:
        if self._dist_to_positive is None:
            return
        delta = self.dataset.features[self._active_sorted] - self.dataset.features[row_id]
        dist = np.sqrt((delta * delta).sum(axis=1))
        self._dist_to_positive = np.minimum(self._dist_to_positive, dist)

    def _lal_features(self) -> np.ndarray:
        p1, disp = self._current_scores()
        pos = np.searchsorted(self._active_sorted, self.pool.unlabeled)
        labels = np.array(list(self.revealed.values()))
        return state_point_features(
            self.pool.n_labeled, float(np.mean(labels)), float(np.mean(p1)),
            float(np.mean(disp)), p1, disp, self._dist_to_positive[pos])

    # ----- the step loop ------------------------------------------------------

    @property
    def steps_completed(self) -> int:
        return len(self.records)

    @property
    def in_exploit_phase(self) -> bool:
        return self.spec.scenario == 2 and self.steps_completed >= self.spec.switch_step

    def finished(self) -> bool:
        return self.steps_completed >= self.horizon or self.pool.n_unlabeled == 0

    def _advise(self, name: str) -> AdviceVector:
        if name == "exploit":
            return greedy_from_scores(self._exploit_unlabeled_p1(), self.pool)
        if name == "base":
            return greedy_from_scores(self._frozen_unlabeled_p1(), self.pool)
        if name == "base_refit":
            return greedy_from_scores(self._current_scores()[0], self.pool)
        if name == "random":
            return advise_random(self.pool)
        if name == "us":
            return uncertainty_from_scores(self._current_scores()[0], self.pool)
        if name in ("lal_independent", "lal_iterative"):
            return advise_lal(self.lal_models[name], self._lal_features(), self.pool)
        if name == "albl":
            advice, self.albl_state = advise_albl(
                self.albl_state, self._current_scores()[0], self.pool)
            return advice
        raise DataError(f"unknown strategy {name!r}")

    def propose(self) -> PendingQuery:
        """Pick a strategy and sample the next row to show the oracle."""
        if self.pending is not None:
            return self.pending
        if self.finished():
            raise DataError("run is finished; no further queries")
        if self.in_exploit_phase:
            names: tuple[str, ...] = ("exploit",)
            w = init_weights(1)
        else:
            names = self.experts
            w = self.weights
        chosen = pick_strategy(w, self._rng_picks)
        advice = self._advise(names[chosen])
        row_id = sample_query(advice, self._rng_queries)
        self.pending = PendingQuery(
            t=self.steps_completed + 1, strategy=names[chosen], row_id=row_id,
            p1=self._payload_p1(row_id))
        self._pending_expert = None if names[0] == "exploit" else chosen
        return self.pending

    def _payload_p1(self, row_id: int) -> float | None:
        if self.in_exploit_phase:
            scores = self._exploit_unlabeled_p1()
        elif self._needs_current:
            scores = self._current_scores()[0]
        elif self._needs_frozen:
            scores = self._frozen_unlabeled_p1()
        else:
            return None
        idx = int(np.searchsorted(self.pool.unlabeled, row_id))
        return float(scores[idx])

    def complete(self, row_id: int, label: int) -> StepRecord:
        """Book the oracle's answer for the pending query and advance the run."""
        if self.pending is None:
            raise DataError("no pending query; call propose() first")
        if int(row_id) != self.pending.row_id:
            raise DataError(
                f"label is for row {row_id}, pending query is row {self.pending.row_id}")
        if label not in (0, 1):
            raise DataError(f"label must be 0 or 1, got {label!r}")

        record_row = self.dataset.record(row_id) if self.reward_spec.kind == "monetary" else None
        reward = compute_reward(int(label), self.reward_spec, record_row)
        self.cum_reward = self.cum_reward + reward
        self.pool = move_to_labeled(self.pool, row_id)
        self.revealed[int(row_id)] = int(label)

        exploit_phase = self._pending_expert is None
        if not exploit_phase:
            self.weights = update_weights(
                self.weights, self._pending_expert, reward, self.spec.cafda)
            if self.albl_state is not None:
                if self.experts[self._pending_expert] == "albl":
                    p1 = 1.0 if self.pending.p1 is not None and self.pending.p1 >= 0.5 else 0.0
                    self.albl_state = update_albl(
                        self.albl_state, int(row_id), int(label), int(p1))
                else:
                    self.albl_state = replace(
                        self.albl_state, last_rows=None, last_mixture=None,
                        last_arm_probs=None)

        record = StepRecord(
            t=self.pending.t, strategy=self.pending.strategy, row_id=int(row_id),
            label=int(label), reward=reward, cum_reward=self.cum_reward,
            weights=[float(x) for x in self.weights]
            if (self._log_weights and not exploit_phase) else None)
        self.records.append(record)
        self.pending = None
        self._pending_expert = None

        if int(label) == 1:
            self._update_distances(int(row_id))

        if not self.finished():
            if self.spec.scenario == 2 and self.steps_completed == self.spec.switch_step:
                self._enter_exploit_phase()
            elif self.in_exploit_phase:
                if self.spec.refit_after_switch:
                    self._refit_current()
            elif self._needs_current:
                self._refit_current()
            else:
                self._current_unl = None
        return record

    def step(self, oracle: LabelOracle) -> StepRecord:
        pending = self.propose()
        return self.complete(pending.row_id, oracle.label_of(pending.row_id))

    def run(self, oracle: LabelOracle) -> RunResult:
        while not self.finished():
            self.step(oracle)
        return RunResult(
            strategy=self.spec.strategy, seed=self.spec.seed, records=self.records,
            final_labeled=[int(r) for r in self.pool.labeled],
            truncated=self.truncated_horizon,
            duration_s=time.perf_counter() - self.started)


def run_scenario1(dataset: Dataset, spec: RunSpec) -> RunResult:
    """Run the configured strategy for the whole horizon against hidden labels."""
    spec = replace(spec, scenario=1)
    return TriageRun(dataset, spec).run(SimulatedOracle(dataset))


def run_scenario2(dataset: Dataset, spec: RunSpec) -> RunResult:
    """Run the strategy for switch_step steps, then exploit the resulting model."""
    spec = replace(spec, scenario=2)
    return TriageRun(dataset, spec).run(SimulatedOracle(dataset))


def run_replications(dataset: Dataset, spec: RunSpec, seeds: list[int],
                     n_jobs: int = 1) -> list[RunResult]:
    """Independent runs across seeds; parallel workers hold isolated state."""
    if not seeds:
        raise DataError("need at least one seed")
    specs = [replace(spec, seed=int(s)) for s in seeds]
    if n_jobs == 1 or len(specs) == 1:
        return [TriageRun(dataset, s).run(SimulatedOracle(dataset)) for s in specs]
    return Parallel(n_jobs=n_jobs)(
        delayed(_run_one)(dataset, s) for s in specs)


def _run_one(dataset: Dataset, spec: RunSpec) -> RunResult:
    return TriageRun(dataset, spec).run(SimulatedOracle(dataset))


@dataclass
class CurvePoint:
    strategy: str
    t: int
    mean_cum_reward: float
    sd: float
    min: float
    max: float


def aggregate_replications(results_by_strategy: dict[str, list[RunResult]]) -> list[CurvePoint]:
    """Per-step mean/sd/min/max of cumulative reward across seeds, per strategy."""
    table: list[CurvePoint] = []
    for strategy, results in results_by_strategy.items():
        if not results:
            raise DataError(f"no runs for strategy {strategy!r}")
        horizons = {len(r.records) for r in results}
        if len(horizons) != 1:
            raise DataError(
                f"mismatched horizons across runs for {strategy!r}: {sorted(horizons)}")
        curves = np.stack([r.cumulative() for r in results])
        for i in range(curves.shape[1]):
            col = curves[:, i]
            table.append(CurvePoint(
                strategy=strategy, t=i + 1, mean_cum_reward=float(col.mean()),
                sd=float(col.std(ddof=0)), min=float(col.min()), max=float(col.max())))
    return table


CURVE_HEADER = "strategy,t,mean_cum_reward,sd,min,max"


def export_curves(table: list[CurvePoint], path) -> None:
    """Write the aggregate curve table as CSV (exact header contract)."""
    if not table:
        raise DataError("empty curve table")
    lines = [CURVE_HEADER]
    for p in table:
        lines.append(f"{p.strategy},{p.t},{p.mean_cum_reward!r},{p.sd!r},{p.min!r},{p.max!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_curves(path) -> list[CurvePoint]:
    with open(path) as fh:
        lines = fh.read().strip().splitlines()
    if not lines or lines[0] != CURVE_HEADER:
        raise DataError(f"unexpected curve CSV header in {path}")
    table = []
    for line in lines[1:]:
        strategy, t, mean, sd, lo, hi = line.split(",")
        table.append(CurvePoint(strategy=strategy, t=int(t), mean_cum_reward=float(mean),
                                sd=float(sd), min=float(lo), max=float(hi)))
    return table
