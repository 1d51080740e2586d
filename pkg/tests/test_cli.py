import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from fraudtriage.cli import main
from fraudtriage.runconfig import (KEYS, UsageError, build_run_spec, dump_config,
                                   effective_config, load_config_file,
                                   parse_assignments, parse_config_text, seeds_of,
                                   strategies_of)
from fraudtriage.synth import make_clustered_fraud_dataset


# ---- config format -------------------------------------------------------------

def test_effective_config_layering():
    values = effective_config({"horizon": 50}, {"horizon": 25, "seed": 9})
    assert values["horizon"] == 25
    assert values["seed"] == 9
    assert values["cafda.k0"] == 0.8


def test_unknown_key_is_named():
    with pytest.raises(UsageError, match="no.such.key"):
        effective_config({}, {"no.such.key": 1})
    with pytest.raises(UsageError, match="nope"):
        parse_assignments(["nope = 3"])


def test_bad_value_reports_key_and_kind():
    with pytest.raises(UsageError, match="horizon.*int"):
        parse_assignments(["horizon = soon"])


def test_config_roundtrip_through_dump():
    values = effective_config({}, {"cafda.k0": 0.85, "strategy": ["base", "cafda"],
                                   "seeds": [1, 2, 3], "split.subsample_size": 500,
                                   "refit_after_switch": True})
    text = dump_config(values)
    reparsed = effective_config(parse_config_text(text))
    assert reparsed == values
    # and a second dump is byte-stable
    assert dump_config(reparsed) == text


def test_comments_and_blank_lines_ignored():
    values = parse_config_text("# a comment\n\nhorizon = 7  # trailing\n")
    assert values == {"horizon": 7}


def test_build_run_spec_materializes_all_sections():
    values = effective_config({}, {"estimator.n_trees": 33, "cafda.p_max": 0.9,
                                   "lal.budget": 77, "albl.eta": 0.2,
                                   "reward.kind": "monetary",
                                   "reward.amount_column": "amt"})
    spec = build_run_spec(values, "cafda", seed=5)
    assert spec.estimator.forest.n_trees == 33
    assert spec.cafda.p_max == 0.9
    assert spec.lal.budget == 77
    assert spec.albl.eta == 0.2
    assert spec.reward.amount_column == "amt"
    assert spec.seed == 5


def test_seeds_and_strategies_helpers():
    values = effective_config({}, {"seeds": [4, 5], "strategy": ["base", "random"]})
    assert seeds_of(values) == [4, 5]
    assert strategies_of(values) == ["base", "random"]
    values = effective_config({}, {"seed": 3})
    assert seeds_of(values) == [3]
    with pytest.raises(UsageError, match="unknown strategy"):
        strategies_of(effective_config({}, {"strategy": ["sideways"]}))


def test_every_key_has_help():
    assert all(key.help for key in KEYS.values())


# ---- CLI ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def demo_csv(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("data") / "demo.csv"
    ds = make_clustered_fraud_dataset(n_samples=300, anomaly_rate=0.1, seed=1)
    frame = pd.DataFrame(ds.features, columns=ds.feature_names)
    frame["label"] = ds.labels
    frame.to_csv(path, index=False)
    return path


def _write_config(path: Path, demo_csv: Path, extra: str = "") -> Path:
    path.write_text(
        f"dataset.path = {demo_csv}\n"
        "strategy = base,random\n"
        "horizon = 8\n"
        "seeds = 1,2\n"
        "split.init_fraction = 0.05\n"
        "estimator.n_trees = 10\n"
        + extra)
    return path


def test_cmd_run_writes_artifacts(tmp_path, demo_csv, capsys):
    cfg = _write_config(tmp_path / "run.cfg", demo_csv)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "base" in stdout and "random" in stdout
    assert (out / "curves.csv").exists()
    assert (out / "curves.png").exists()
    assert (out / "effective.cfg").exists()
    assert (out / "timing.json").exists()
    for strategy in ("base", "random"):
        for seed in (1, 2):
            log = out / "logs" / strategy / f"seed{seed}.jsonl"
            assert log.exists()
            lines = log.read_text().strip().splitlines()
            assert len(lines) == 8
            meta = json.loads((out / "logs" / strategy / f"seed{seed}.meta.json").read_text())
            assert meta["config_digest"]


def test_cmd_run_artifacts_reproducible_excluding_timing(tmp_path, demo_csv):
    cfg = _write_config(tmp_path / "run.cfg", demo_csv)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(cfg), "--out", str(out_a)]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(out_b)]) == 0
    files_a = sorted(p.relative_to(out_a) for p in out_a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(out_b) for p in out_b.rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        if rel.name == "timing.json":
            continue
        assert (out_a / rel).read_bytes() == (out_b / rel).read_bytes(), rel


def test_cmd_run_seed_override_changes_logs(tmp_path, demo_csv):
    cfg = _write_config(tmp_path / "run.cfg", demo_csv, extra="strategy = random\n")
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(cfg), "--out", str(out_a), "seeds=3"]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(out_b), "seeds=7"]) == 0
    assert (out_a / "logs" / "random" / "seed3.jsonl").read_text() != \
           (out_b / "logs" / "random" / "seed7.jsonl").read_text()


def test_cmd_run_unknown_override_exits_one(tmp_path, demo_csv, capsys):
    cfg = _write_config(tmp_path / "run.cfg", demo_csv)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"),
                 "not.a.key=1"]) == 1
    assert "not.a.key" in capsys.readouterr().err


def test_cmd_run_missing_dataset_exits_two(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("dataset.path = /nowhere/data.csv\nstrategy = random\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "not found" in capsys.readouterr().err


def test_cmd_run_requires_dataset_path(tmp_path, capsys):
    cfg = tmp_path / "empty.cfg"
    cfg.write_text("strategy = random\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "dataset.path" in capsys.readouterr().err


def test_cmd_compare_ranks_runs(tmp_path, demo_csv, capsys):
    cfg = _write_config(tmp_path / "run.cfg", demo_csv)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    main(["run", "--config", str(cfg), "--out", str(out_a)])
    main(["run", "--config", str(cfg), "--out", str(out_b)])
    capsys.readouterr()
    assert main(["compare", str(out_a), str(out_b)]) == 0
    stdout = capsys.readouterr().out
    assert "final mean cumulated reward" in stdout
    assert (out_a / "comparison.csv").exists()
    # identical runs rank with identical means
    lines = (out_a / "comparison.csv").read_text().strip().splitlines()[1:]
    means = {}
    for line in lines:
        _, strategy, _, mean, _ = line.split(",")
        means.setdefault(strategy, set()).add(mean)
    assert all(len(v) == 1 for v in means.values())


def test_cmd_compare_missing_dir_exits_two(tmp_path, capsys):
    assert main(["compare", str(tmp_path / "missing")]) == 2
    assert "curves.csv" in capsys.readouterr().err


def test_cmd_prepare_data_synth(tmp_path, capsys):
    out = tmp_path / "synth.csv"
    assert main(["prepare-data", "synth", "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "5000 samples" in stdout
    assert out.exists()


def test_prepare_data_shuttle_fixture(tmp_path, capsys):
    raw = tmp_path / "shuttle.raw"
    rng = np.random.default_rng(0)
    lines = []
    classes = [1] * 93 + [4] * 4 + [5] * 3  # 7% anomalies under the !=1 mapping
    for cls in classes:
        feats = rng.integers(0, 100, size=9)
        lines.append(" ".join(str(v) for v in feats) + f" {cls}")
    raw.write_text("\n".join(lines) + "\n")
    out = tmp_path / "shuttle.csv"
    assert main(["prepare-data", "shuttle", "--raw", str(raw), "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "100 samples" in stdout
    assert "9 feature columns" in stdout
    assert "7.00%" in stdout


def test_prepare_data_covtype_fixture(tmp_path, capsys):
    raw = tmp_path / "covtype.raw"
    rng = np.random.default_rng(1)
    rows = []
    # covers 1 and 3 must be dropped; 2 -> 0, 4/5 -> 1
    for cover, count in ((1, 10), (2, 80), (3, 5), (4, 3), (5, 2)):
        for _ in range(count):
            rows.append(",".join(str(v) for v in rng.integers(0, 50, size=54))
                        + f",{cover}")
    raw.write_text("\n".join(rows) + "\n")
    out = tmp_path / "covtype.csv"
    assert main(["prepare-data", "covtype", "--raw", str(raw), "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "85 samples" in stdout  # 80 + 3 + 2 kept
    assert "5.88%" in stdout  # 5/85


def test_prepare_data_creditcard_fixture(tmp_path, capsys):
    raw = tmp_path / "cc.csv"
    rng = np.random.default_rng(2)
    cols = ["Time"] + [f"V{i}" for i in range(1, 29)] + ["Amount"]
    frame = pd.DataFrame(rng.normal(size=(50, 30)), columns=cols)
    frame["Class"] = [1 if i < 2 else 0 for i in range(50)]
    frame.to_csv(raw, index=False)
    out = tmp_path / "cc_canonical.csv"
    assert main(["prepare-data", "creditcard", "--raw", str(raw), "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "50 samples" in stdout
    assert "30 feature columns" in stdout


def test_prepare_data_truncated_raw_exits_two(tmp_path, capsys):
    raw = tmp_path / "short.raw"
    raw.write_text("1 2 3 4\n")  # far too few columns for shuttle
    assert main(["prepare-data", "shuttle", "--raw", str(raw),
                 "--out", str(tmp_path / "x.csv")]) == 2
    assert "10 columns" in capsys.readouterr().err


def test_cmd_compare_ranks_cafda_above_random(tmp_path, demo_csv, capsys):
    base = (f"dataset.path = {demo_csv}\n"
            "horizon = 12\n"
            "seeds = 1,2\n"
            "split.init_fraction = 0.05\n"
            "estimator.n_trees = 10\n"
            "lal.budget = 20\n"
            "lal.sim_trees = 5\n"
            "cafda.experts = base,base_refit,random\n")
    cfg_a = tmp_path / "cafda.cfg"
    cfg_a.write_text(base + "strategy = cafda\n")
    cfg_b = tmp_path / "random.cfg"
    cfg_b.write_text(base + "strategy = random\n")
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(cfg_a), "--out", str(out_a)]) == 0
    assert main(["run", "--config", str(cfg_b), "--out", str(out_b)]) == 0
    capsys.readouterr()
    assert main(["compare", str(out_a), str(out_b)]) == 0
    ranking = (out_a / "comparison.csv").read_text().strip().splitlines()[1:]
    position = {line.split(",")[1]: int(line.split(",")[0]) for line in ranking}
    assert position["cafda"] < position["random"]
