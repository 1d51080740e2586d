import json
from pathlib import Path

import pandas as pd
import pytest
from fastapi.testclient import TestClient

from fraudtriage.harness import jsonl_lines, run_scenario1
from fraudtriage.datapool import load_dataset
from fraudtriage.runconfig import build_run_spec, effective_config
from fraudtriage.service import _coerce_config, create_app
from fraudtriage.synth import make_clustered_fraud_dataset


@pytest.fixture(scope="module")
def demo_csv(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("data") / "svc.csv"
    ds = make_clustered_fraud_dataset(n_samples=300, anomaly_rate=0.1, seed=2)
    frame = pd.DataFrame(ds.features, columns=ds.feature_names)
    frame["label"] = ds.labels
    frame.to_csv(path, index=False)
    return path


def _session_config(demo_csv, **extra):
    config = {
        "dataset.path": str(demo_csv),
        "strategy": "cafda",
        "horizon": 10,
        "seed": 3,
        "split.init_fraction": 0.05,
        "split.seed": 11,
        "estimator.n_trees": 10,
        "lal.budget": 15,
        "lal.sim_trees": 5,
        "cafda.experts": "base,base_refit,random",
    }
    config.update(extra)
    return config


@pytest.fixture
def client(demo_csv):
    return TestClient(create_app())


def test_create_session_and_distinct_ids(client, demo_csv):
    r1 = client.post("/api/sessions", json={"config": _session_config(demo_csv)})
    r2 = client.post("/api/sessions", json={"config": _session_config(demo_csv)})
    assert r1.status_code == 201
    assert r2.status_code == 201
    assert r1.json()["session_id"] != r2.json()["session_id"]
    state = r1.json()["state"]
    assert state["t"] == 0
    assert state["cum_reward"] == 0


def test_create_session_bad_dataset_422(client):
    resp = client.post("/api/sessions",
                       json={"config": {"dataset.path": "/nowhere.csv"}})
    assert resp.status_code == 422
    assert "not found" in resp.json()["detail"]


def test_create_session_rejects_multi_strategy(client, demo_csv):
    resp = client.post("/api/sessions", json={
        "config": _session_config(demo_csv, strategy="base,random")})
    assert resp.status_code == 422
    assert "exactly one strategy" in resp.json()["detail"]


def test_create_session_unknown_key_422(client, demo_csv):
    resp = client.post("/api/sessions", json={
        "config": {**_session_config(demo_csv), "bogus.key": "1"}})
    assert resp.status_code == 422
    assert "bogus.key" in resp.json()["detail"]


def test_next_is_idempotent_until_labeled(client, demo_csv):
    sid = client.post("/api/sessions",
                      json={"config": _session_config(demo_csv)}).json()["session_id"]
    first = client.get(f"/api/sessions/{sid}/next")
    second = client.get(f"/api/sessions/{sid}/next")
    assert first.status_code == 200
    assert first.json() == second.json()
    payload = first.json()
    assert payload["t"] == 1
    assert set(payload) == {"session_id", "t", "strategy", "row_id", "p1", "features"}
    assert isinstance(payload["features"], dict)


def test_label_flow_updates_state(client, demo_csv):
    sid = client.post("/api/sessions",
                      json={"config": _session_config(demo_csv)}).json()["session_id"]
    payload = client.get(f"/api/sessions/{sid}/next").json()
    resp = client.post(f"/api/sessions/{sid}/label",
                       json={"row_id": payload["row_id"], "label": 1})
    assert resp.status_code == 200
    body = resp.json()
    assert body["reward"] == 1
    assert body["cum_reward"] == 1
    assert "weights" in body  # cafda session reports the mixture state
    state = client.get(f"/api/sessions/{sid}/state").json()
    assert state["t"] == 1
    assert state["cum_reward"] == 1
    assert state["rewards"] == [1]
    assert len(state["weights_history"]) == 1

    payload = client.get(f"/api/sessions/{sid}/next").json()
    resp = client.post(f"/api/sessions/{sid}/label",
                       json={"row_id": payload["row_id"], "label": 0})
    assert resp.json()["reward"] == 0
    assert resp.json()["cum_reward"] == 1


def test_label_stale_row_409_state_unchanged(client, demo_csv):
    sid = client.post("/api/sessions",
                      json={"config": _session_config(demo_csv)}).json()["session_id"]
    payload = client.get(f"/api/sessions/{sid}/next").json()
    wrong = payload["row_id"] + 1
    resp = client.post(f"/api/sessions/{sid}/label", json={"row_id": wrong, "label": 1})
    assert resp.status_code == 409
    assert client.get(f"/api/sessions/{sid}/state").json()["t"] == 0
    # the pending query is still the same
    assert client.get(f"/api/sessions/{sid}/next").json() == payload


def test_label_without_pending_409(client, demo_csv):
    sid = client.post("/api/sessions",
                      json={"config": _session_config(demo_csv)}).json()["session_id"]
    resp = client.post(f"/api/sessions/{sid}/label", json={"row_id": 1, "label": 1})
    assert resp.status_code == 409


def test_label_out_of_range_422(client, demo_csv):
    sid = client.post("/api/sessions",
                      json={"config": _session_config(demo_csv)}).json()["session_id"]
    payload = client.get(f"/api/sessions/{sid}/next").json()
    resp = client.post(f"/api/sessions/{sid}/label",
                       json={"row_id": payload["row_id"], "label": 2})
    assert resp.status_code == 422


def test_unknown_session_404(client):
    assert client.get("/api/sessions/nope/next").status_code == 404
    assert client.get("/api/sessions/nope/state").status_code == 404
    assert client.post("/api/sessions/nope/label",
                       json={"row_id": 0, "label": 1}).status_code == 404


def test_exhausted_horizon_410_with_summary(client, demo_csv):
    config = _session_config(demo_csv, horizon=2, strategy="random")
    sid = client.post("/api/sessions", json={"config": config}).json()["session_id"]
    for _ in range(2):
        payload = client.get(f"/api/sessions/{sid}/next").json()
        client.post(f"/api/sessions/{sid}/label",
                    json={"row_id": payload["row_id"], "label": 0})
    resp = client.get(f"/api/sessions/{sid}/next")
    assert resp.status_code == 410
    assert resp.json()["summary"]["finished"] is True


def test_trace_equivalence_with_simulated_run(client, demo_csv):
    # Feeding the hidden labels through post_label reproduces run_scenario1's
    # log byte-for-byte.
    config = _session_config(demo_csv)
    dataset = load_dataset(demo_csv, "label")
    values = effective_config({}, _coerce_config(config))
    spec = build_run_spec(values, "cafda")
    reference = run_scenario1(dataset, spec)

    sid = client.post("/api/sessions", json={"config": config}).json()["session_id"]
    while True:
        nxt = client.get(f"/api/sessions/{sid}/next")
        if nxt.status_code == 410:
            break
        row_id = nxt.json()["row_id"]
        client.post(f"/api/sessions/{sid}/label",
                    json={"row_id": row_id, "label": int(dataset.labels[row_id])})
    log = client.get(f"/api/sessions/{sid}/log").text
    assert log == jsonl_lines(reference.records)


def test_replay_endpoint_matches_manual_labels(client, demo_csv):
    config = _session_config(demo_csv, strategy="base_refit", horizon=6)
    sid_a = client.post("/api/sessions", json={"config": config}).json()["session_id"]
    client.post(f"/api/sessions/{sid_a}/replay", json={"steps": 6})
    log_a = client.get(f"/api/sessions/{sid_a}/log").text

    dataset = load_dataset(demo_csv, "label")
    sid_b = client.post("/api/sessions", json={"config": config}).json()["session_id"]
    while True:
        nxt = client.get(f"/api/sessions/{sid_b}/next")
        if nxt.status_code == 410:
            break
        row_id = nxt.json()["row_id"]
        client.post(f"/api/sessions/{sid_b}/label",
                    json={"row_id": row_id, "label": int(dataset.labels[row_id])})
    assert log_a == client.get(f"/api/sessions/{sid_b}/log").text


def test_replay_can_be_disabled(client, demo_csv):
    config = _session_config(demo_csv, **{"oracle.replay": "false"})
    sid = client.post("/api/sessions", json={"config": config}).json()["session_id"]
    resp = client.post(f"/api/sessions/{sid}/replay", json={"steps": 1})
    assert resp.status_code == 403


def test_sessions_recover_from_logs(tmp_path, demo_csv):
    sessions_dir = tmp_path / "sessions"
    app = create_app(sessions_dir=sessions_dir)
    client = TestClient(app)
    config = _session_config(demo_csv, strategy="base", horizon=8)
    sid = client.post("/api/sessions", json={"config": config}).json()["session_id"]
    client.post(f"/api/sessions/{sid}/replay", json={"steps": 5})
    state_before = client.get(f"/api/sessions/{sid}/state").json()
    log_before = client.get(f"/api/sessions/{sid}/log").text

    # simulate a restart: a fresh app over the same sessions dir
    revived = TestClient(create_app(sessions_dir=sessions_dir))
    state_after = revived.get(f"/api/sessions/{sid}/state").json()
    assert state_after == state_before
    assert revived.get(f"/api/sessions/{sid}/log").text == log_before
    # and the revived session keeps advancing deterministically
    revived.post(f"/api/sessions/{sid}/replay", json={"steps": 3})
    assert revived.get(f"/api/sessions/{sid}/state").json()["t"] == 8


def test_index_placeholder_without_bundle(tmp_path):
    app = create_app(frontend_dir=tmp_path / "missing")
    client = TestClient(app)
    resp = client.get("/")
    assert resp.status_code == 200
    assert "console" in resp.text.lower() or "api" in resp.text.lower()


def test_console_bundle_served_when_built():
    from fraudtriage.service import FRONTEND_DIST
    if not FRONTEND_DIST.is_dir():
        pytest.skip("frontend bundle not built")
    client = TestClient(create_app())
    resp = client.get("/")
    assert resp.status_code == 200
    assert "Fraud triage console" in resp.text
