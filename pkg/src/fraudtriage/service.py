"""HTTP oracle service: a human (or replay oracle) answers the queries.

One pending query per session enforces the strictly sequential protocol:
GET next proposes a row (idempotent until answered), POST label books the
verdict and advances the strategy state exactly like one harness step.
Sessions persist as append-only JSON-lines step logs plus a meta file and
are rebuilt from them on restart.
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .datapool import DataError, Dataset, load_dataset
from .harness import StepRecord, TriageRun, jsonl_lines
from .runconfig import (UsageError, build_run_spec, dump_config, effective_config,
                        parse_config_text, strategies_of)

FRONTEND_DIST = Path(__file__).resolve().parents[2] / "frontend" / "dist"


class Session:
    def __init__(self, session_id: str, dataset: Dataset, run: TriageRun,
                 values: dict, steps_path: Path | None):
        self.session_id = session_id
        self.dataset = dataset
        self.run = run
        self.values = values
        self.steps_path = steps_path
        self.lock = threading.Lock()
        self.weights_history: list[list[float]] = []

    @property
    def replay_allowed(self) -> bool:
        return bool(self.values["oracle.replay"])

    def record_step(self, record: StepRecord) -> None:
        if record.weights is not None:
            self.weights_history.append(record.weights)
        if self.steps_path is not None:
            with open(self.steps_path, "a") as fh:
                fh.write(record.to_json() + "\n")

    def next_payload(self) -> dict:
        pending = self.run.propose()
        features = self.dataset.features[pending.row_id]
        return {
            "session_id": self.session_id,
            "t": pending.t,
            "strategy": pending.strategy,
            "row_id": pending.row_id,
            "p1": pending.p1,
            "features": {name: float(v) for name, v
                         in zip(self.dataset.feature_names, features)},
        }

    def summary(self) -> dict:
        run = self.run
        return {
            "session_id": self.session_id,
            "strategy": run.spec.strategy,
            "t": run.steps_completed,
            "horizon": run.horizon,
            "cum_reward": run.cum_reward,
            "finished": run.finished(),
            "labeled": run.pool.n_labeled,
            "unlabeled": run.pool.n_unlabeled,
        }

    def state_payload(self) -> dict:
        payload = self.summary()
        payload["rewards"] = [rec.reward for rec in self.run.records]
        payload["cum_rewards"] = [rec.cum_reward for rec in self.run.records]
        payload["weights_history"] = self.weights_history
        payload["expert_names"] = list(self.run.experts)
        return payload


def _coerce_config(body_config: dict[str, Any]) -> dict:
    """Accept flat config values as JSON natives or key=value style strings."""
    text_lines = []
    native = {}
    for key, value in body_config.items():
        if isinstance(value, str):
            text_lines.append(f"{key} = {value}")
        elif isinstance(value, list):
            text_lines.append(f"{key} = {','.join(str(v) for v in value)}")
        elif isinstance(value, bool):
            text_lines.append(f"{key} = {'true' if value else 'false'}")
        else:
            text_lines.append(f"{key} = {value}")
    native.update(parse_config_text("\n".join(text_lines)))
    return native


def create_app(default_config: dict | None = None,
               sessions_dir: str | Path | None = None,
               frontend_dir: str | Path | None = None,
               recover: bool = True) -> FastAPI:
    app = FastAPI(title="fraudtriage oracle service")
    sessions: dict[str, Session] = {}
    app.state.sessions = sessions
    sessions_path = Path(sessions_dir) if sessions_dir else None
    if sessions_path:
        sessions_path.mkdir(parents=True, exist_ok=True)

    def _build_session(session_id: str, values: dict) -> Session:
        strategies = strategies_of(values)
        if len(strategies) != 1:
            raise UsageError("a session drives exactly one strategy; "
                             f"got {', '.join(strategies)}")
        if not values["dataset.path"]:
            raise UsageError("dataset.path is required")
        dataset = load_dataset(values["dataset.path"], values["dataset.label_column"],
                               name=values["dataset.name"] or None)
        spec = build_run_spec(values, strategies[0])
        run = TriageRun(dataset, spec)
        steps_path = sessions_path / f"{session_id}.steps.jsonl" if sessions_path else None
        return Session(session_id, dataset, run, values, steps_path)

    def _persist_meta(session: Session) -> None:
        if sessions_path is None:
            return
        meta = {"session_id": session.session_id,
                "config": dump_config(session.values)}
        (sessions_path / f"{session.session_id}.meta.json").write_text(
            json.dumps(meta) + "\n")

    def _recover_sessions() -> None:
        if sessions_path is None:
            return
        for meta_file in sorted(sessions_path.glob("*.meta.json")):
            meta = json.loads(meta_file.read_text())
            session_id = meta["session_id"]
            values = effective_config(parse_config_text(meta["config"]))
            session = _build_session(session_id, values)
            steps_file = sessions_path / f"{session_id}.steps.jsonl"
            if steps_file.exists():
                # replay the analyst's answers through the fresh run
                session.steps_path = None  # do not double-append while replaying
                for line in steps_file.read_text().splitlines():
                    step = json.loads(line)
                    pending = session.run.propose()
                    if pending.row_id != step["row_id"]:
                        raise DataError(
                            f"session {session_id} log diverges at t={step['t']}")
                    record = session.run.complete(step["row_id"], step["label"])
                    if record.weights is not None:
                        session.weights_history.append(record.weights)
                session.steps_path = steps_file
            sessions[session_id] = session

    if recover:
        _recover_sessions()

    def _get_session(session_id: str) -> Session | None:
        return sessions.get(session_id)

    @app.post("/api/sessions", status_code=201)
    async def create_session(request: Request):
        body = await request.json()
        if not isinstance(body, dict) or not isinstance(body.get("config", {}), dict):
            return JSONResponse({"detail": "body must be {config: {...}}"}, status_code=422)
        try:
            overrides = _coerce_config(body.get("config", {}))
            values = effective_config(default_config, overrides)
            session_id = uuid.uuid4().hex[:12]
            session = _build_session(session_id, values)
        except (UsageError, DataError) as exc:
            return JSONResponse({"detail": str(exc)}, status_code=422)
        sessions[session_id] = session
        _persist_meta(session)
        return {"session_id": session_id, "state": session.summary()}

    @app.get("/api/sessions/{session_id}/next")
    def get_next(session_id: str):
        session = _get_session(session_id)
        if session is None:
            return JSONResponse({"detail": "unknown session"}, status_code=404)
        with session.lock:
            if session.run.finished():
                return JSONResponse(
                    {"detail": "pool exhausted or horizon reached",
                     "summary": session.summary()}, status_code=410)
            return session.next_payload()

    @app.post("/api/sessions/{session_id}/label")
    def post_label(session_id: str, body: dict):
        session = _get_session(session_id)
        if session is None:
            return JSONResponse({"detail": "unknown session"}, status_code=404)
        row_id, label = body.get("row_id"), body.get("label")
        if label not in (0, 1):
            return JSONResponse({"detail": f"label must be 0 or 1, got {label!r}"},
                                status_code=422)
        with session.lock:
            run = session.run
            if run.pending is None:
                return JSONResponse({"detail": "no pending query; GET next first"},
                                    status_code=409)
            if row_id != run.pending.row_id:
                return JSONResponse(
                    {"detail": f"pending query is row {run.pending.row_id}, "
                               f"got label for row {row_id}"}, status_code=409)
            record = run.complete(row_id, label)
            session.record_step(record)
            response = {"t": record.t, "row_id": record.row_id, "label": record.label,
                        "reward": record.reward, "cum_reward": record.cum_reward,
                        "finished": run.finished()}
            if record.weights is not None:
                response["weights"] = record.weights
            return response

    @app.post("/api/sessions/{session_id}/replay")
    def replay_steps(session_id: str, body: dict | None = None):
        session = _get_session(session_id)
        if session is None:
            return JSONResponse({"detail": "unknown session"}, status_code=404)
        if not session.replay_allowed:
            return JSONResponse({"detail": "replay oracle disabled for this session"},
                                status_code=403)
        steps = int((body or {}).get("steps", 1))
        with session.lock:
            done = 0
            labels = session.dataset.labels
            while done < steps and not session.run.finished():
                pending = session.run.propose()
                record = session.run.complete(pending.row_id,
                                              int(labels[pending.row_id]))
                session.record_step(record)
                done += 1
            return {"steps_taken": done, "state": session.summary()}

    @app.get("/api/sessions/{session_id}/state")
    def get_state(session_id: str):
        session = _get_session(session_id)
        if session is None:
            return JSONResponse({"detail": "unknown session"}, status_code=404)
        with session.lock:
            return session.state_payload()

    @app.get("/api/sessions/{session_id}/log")
    def get_log(session_id: str):
        session = _get_session(session_id)
        if session is None:
            return JSONResponse({"detail": "unknown session"}, status_code=404)
        with session.lock:
            return PlainTextResponse(jsonl_lines(session.run.records))

    front = Path(frontend_dir) if frontend_dir else FRONTEND_DIST
    if front.is_dir():
        app.mount("/", StaticFiles(directory=front, html=True), name="console")
    else:
        @app.get("/")
        def index_placeholder():
            return PlainTextResponse(
                "fraudtriage oracle service. The console bundle is not built; "
                "see frontend/README.md. API under /api/sessions.")
    return app
