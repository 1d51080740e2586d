"""Flat key=value run configuration with dotted namespaces.

One documented registry of keys; files and command-line overrides share the
same syntax (`cafda.k0 = 0.8`). Overrides win over file values, file values
over defaults. The effective config dumps to text that re-parses to the
identical mapping.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .albl import AlblConfig
from .cafda import CafdaConfig
from .datapool import SplitConfig
from .estimator import EstimatorConfig, ForestParams, LogisticParams
from .harness import ALL_STRATEGIES, RewardSpec, RunSpec
from .lal import LalConfig


class UsageError(Exception):
    """Bad config keys/values or malformed command lines (exit code 1)."""


@dataclass(frozen=True)
class Key:
    kind: str  # int | float | bool | str | opt_int | opt_str | list_str | list_int
    default: object
    help: str


KEYS: dict[str, Key] = {
    "dataset.path": Key("str", "", "canonical CSV with a 0/1 label column"),
    "dataset.label_column": Key("str", "label", "name of the label column"),
    "dataset.name": Key("str", "", "dataset display name (default: file stem)"),
    "split.init_fraction": Key("float", 0.01, "initially labeled fraction"),
    "split.subsample_size": Key("opt_int", None, "subsample the pool to this size first"),
    "split.seed": Key("opt_int", None, "fixed split seed (default: derived per run seed)"),
    "split.min_positives": Key("int", 1, "resample until this many positives are labeled"),
    "split.min_negatives": Key("int", 1, "resample until this many negatives are labeled"),
    "split.max_retries": Key("int", 100, "resample attempts before giving up"),
    "strategy": Key("list_str", ["cafda"], "strategies to run (comma separated)"),
    "scenario": Key("int", 1, "1 = strategy all the way, 2 = switch to exploitation"),
    "horizon": Key("int", 100, "oracle queries per run"),
    "switch_step": Key("int", 100, "scenario 2: steps before pure exploitation"),
    "refit_after_switch": Key("bool", False, "scenario 2: keep refitting after the switch"),
    "seed": Key("int", 0, "run seed (used when seeds is empty)"),
    "seeds": Key("list_int", [], "replication seeds (overrides seed when non-empty)"),
    "reward.kind": Key("str", "unitary", "unitary or monetary"),
    "reward.amount_column": Key("opt_str", None, "feature column holding the amount"),
    "estimator.kind": Key("str", "random_forest", "random_forest or logistic"),
    "estimator.n_trees": Key("int", 100, "forest size"),
    "estimator.max_depth": Key("opt_int", None, "forest depth cap"),
    "estimator.min_leaf": Key("int", 1, "min samples per leaf"),
    "estimator.features_per_split": Key("str", "sqrt", "features considered per split"),
    "estimator.vote_mode": Key("str", "hard", "hard votes or leaf_freq averaging"),
    "estimator.l2_penalty": Key("float", 1e-3, "logistic L2 strength"),
    "estimator.max_iterations": Key("int", 500, "logistic iteration cap"),
    "estimator.tolerance": Key("float", 1e-8, "logistic convergence tolerance"),
    "estimator.cv": Key("bool", False, "pick hyperparameters by CV on the initial pool"),
    "estimator.cv_folds": Key("int", 3, "stratified folds for CV"),
    "cafda.k0": Key("float", 0.8, "multiplicative down-step on zero reward"),
    "cafda.k1": Key("float", 1.2, "multiplicative up-step on reward"),
    "cafda.p_min": Key("float", 0.001, "weight floor before normalization"),
    "cafda.p_max": Key("float", 0.95, "weight ceiling before normalization"),
    "cafda.experts": Key("list_str",
                         ["base", "base_refit", "random", "lal_independent", "lal_iterative"],
                         "expert pool mixed by cafda"),
    "lal.budget": Key("int", 150, "simulated (state, candidate) training rows"),
    "lal.task_samples": Key("int", 120, "rows per synthetic task"),
    "lal.task_dim": Key("int", 2, "synthetic task dimension"),
    "lal.min_labeled": Key("int", 8, "smallest simulated labeled set"),
    "lal.max_labeled": Key("int", 40, "largest simulated labeled set"),
    "lal.sim_trees": Key("int", 15, "forest size inside simulations"),
    "lal.regressor_trees": Key("int", 50, "forest size of the improvement regressor"),
    "lal.seq_length": Key("int", 10, "iterative mode: queries per simulated run"),
    "lal.warm_start": Key("int", 30, "iterative mode: random rows before self-selection"),
    "lal.refit_every": Key("int", 25, "iterative mode: regressor refresh cadence"),
    "albl.arms": Key("list_str", ["us", "random"], "arms of the internal bandit"),
    "albl.eta": Key("float", 0.5, "internal bandit learning rate"),
    "albl.gamma": Key("float", 0.1, "internal bandit exploration floor"),
    "oracle.replay": Key("bool", True, "allow auto-answering sessions from hidden labels"),
}


def _parse_value(key: str, text: str):
    spec = KEYS.get(key)
    if spec is None:
        raise UsageError(f"unknown config key {key!r}")
    text = text.strip()
    try:
        if spec.kind == "int":
            return int(text)
        if spec.kind == "float":
            return float(text)
        if spec.kind == "bool":
            if text.lower() in ("true", "1", "yes"):
                return True
            if text.lower() in ("false", "0", "no"):
                return False
            raise ValueError(text)
        if spec.kind == "str":
            return text
        if spec.kind == "opt_int":
            return None if text in ("", "none") else int(text)
        if spec.kind == "opt_str":
            return None if text in ("", "none") else text
        if spec.kind == "list_str":
            return [part.strip() for part in text.split(",") if part.strip()]
        if spec.kind == "list_int":
            return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise UsageError(f"bad value {text!r} for key {key!r} ({spec.kind})") from exc
    raise UsageError(f"unhandled kind {spec.kind}")  # pragma: no cover


def _format_value(key: str, value) -> str:
    kind = KEYS[key].kind
    if value is None:
        return ""
    if kind == "bool":
        return "true" if value else "false"
    if kind in ("list_str", "list_int"):
        return ",".join(str(v) for v in value)
    return str(value)


def parse_assignments(lines: list[str], source: str = "config") -> dict:
    values = {}
    for i, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{source} line {i}: expected key=value, got {raw.strip()!r}")
        key, text = line.split("=", 1)
        values[key.strip()] = _parse_value(key.strip(), text)
    return values


def load_config_file(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    return parse_assignments(path.read_text().splitlines(), source=str(path))


def effective_config(file_values: dict | None = None, overrides: dict | None = None) -> dict:
    values = {key: spec.default for key, spec in KEYS.items()}
    for layer in (file_values or {}, overrides or {}):
        for key, value in layer.items():
            if key not in KEYS:
                raise UsageError(f"unknown config key {key!r}")
            values[key] = value
    return values


def dump_config(values: dict) -> str:
    lines = [f"{key} = {_format_value(key, values[key])}" for key in sorted(values)]
    return "\n".join(lines) + "\n"


def parse_config_text(text: str) -> dict:
    return parse_assignments(text.splitlines())


def seeds_of(values: dict) -> list[int]:
    return list(values["seeds"]) if values["seeds"] else [values["seed"]]


def build_run_spec(values: dict, strategy: str, seed: int | None = None) -> RunSpec:
    forest = ForestParams(
        n_trees=values["estimator.n_trees"],
        max_depth=values["estimator.max_depth"],
        min_leaf=values["estimator.min_leaf"],
        features_per_split=values["estimator.features_per_split"],
        vote_mode=values["estimator.vote_mode"],
    )
    logistic = LogisticParams(
        l2_penalty=values["estimator.l2_penalty"],
        max_iterations=values["estimator.max_iterations"],
        tolerance=values["estimator.tolerance"],
    )
    return RunSpec(
        strategy=strategy,
        experts=tuple(values["cafda.experts"]),
        scenario=values["scenario"],
        horizon=values["horizon"],
        switch_step=values["switch_step"],
        refit_after_switch=values["refit_after_switch"],
        seed=values["seed"] if seed is None else seed,
        split=SplitConfig(
            init_fraction=values["split.init_fraction"],
            subsample_size=values["split.subsample_size"],
            seed=values["split.seed"],
            min_positives=values["split.min_positives"],
            min_negatives=values["split.min_negatives"],
            max_retries=values["split.max_retries"],
        ),
        estimator=EstimatorConfig(kind=values["estimator.kind"], forest=forest,
                                  logistic=logistic),
        cafda=CafdaConfig(k0=values["cafda.k0"], k1=values["cafda.k1"],
                          p_min=values["cafda.p_min"], p_max=values["cafda.p_max"]),
        lal=LalConfig(
            budget=values["lal.budget"],
            task_samples=values["lal.task_samples"],
            task_dim=values["lal.task_dim"],
            min_labeled=values["lal.min_labeled"],
            max_labeled=values["lal.max_labeled"],
            sim_trees=values["lal.sim_trees"],
            regressor_trees=values["lal.regressor_trees"],
            seq_length=values["lal.seq_length"],
            warm_start=values["lal.warm_start"],
            refit_every=values["lal.refit_every"],
        ),
        albl=AlblConfig(arms=tuple(values["albl.arms"]), eta=values["albl.eta"],
                        gamma=values["albl.gamma"]),
        reward=RewardSpec(kind=values["reward.kind"],
                          amount_column=values["reward.amount_column"]),
        cv=values["estimator.cv"],
        cv_folds=values["estimator.cv_folds"],
    )


def strategies_of(values: dict) -> list[str]:
    names = values["strategy"]
    for name in names:
        if name not in ALL_STRATEGIES:
            raise UsageError(
                f"unknown strategy {name!r}; choose from {', '.join(ALL_STRATEGIES)}")
    return names
