"""Command-line entry point.

Verbs:
  prepare-data  normalize a public raw dataset to the canonical CSV
  run           execute the configured strategies/seeds, write logs + curves
  compare       rank finished run directories by final mean reward
  serve         launch the interactive oracle service

Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime error.
The default output directory comes from $FRAUDTRIAGE_OUT (else ./runs).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from .datapool import DataError, load_dataset
from .harness import (aggregate_replications, export_curves, jsonl_lines,
                      read_curves, run_replications)
from .prepare import PREPARED_DATASETS, describe, prepare_dataset
from .reports import render_curves
from .runconfig import (UsageError, build_run_spec, dump_config, effective_config,
                        load_config_file, parse_assignments, seeds_of, strategies_of)

OUT_ENV = "FRAUDTRIAGE_OUT"


def _default_out() -> Path:
    return Path(os.environ.get(OUT_ENV, "runs"))


def _config_digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def cmd_prepare_data(args) -> int:
    dataset = prepare_dataset(args.name, args.raw, args.out)
    print(describe(dataset))
    print(f"canonical CSV written to {args.out}")
    return 0


def cmd_run(args) -> int:
    file_values = load_config_file(args.config) if args.config else {}
    overrides = parse_assignments(args.overrides, source="override")
    values = effective_config(file_values, overrides)
    if not values["dataset.path"]:
        raise UsageError("dataset.path is required (set it in the config or as an override)")

    dataset = load_dataset(values["dataset.path"], values["dataset.label_column"],
                           name=values["dataset.name"] or None)
    strategies = strategies_of(values)
    seeds = seeds_of(values)

    out_dir = Path(args.out) if args.out else _default_out()
    out_dir.mkdir(parents=True, exist_ok=True)
    effective_text = dump_config(values)
    (out_dir / "effective.cfg").write_text(effective_text)
    digest = _config_digest(effective_text)

    started = time.perf_counter()
    results = {}
    timing = {}
    for strategy in strategies:
        spec = build_run_spec(values, strategy)
        runs = run_replications(dataset, spec, seeds, n_jobs=args.jobs)
        results[strategy] = runs
        log_dir = out_dir / "logs" / strategy
        log_dir.mkdir(parents=True, exist_ok=True)
        for run in runs:
            (log_dir / f"seed{run.seed}.jsonl").write_text(jsonl_lines(run.records))
            (log_dir / f"seed{run.seed}.meta.json").write_text(json.dumps({
                "strategy": run.strategy, "seed": run.seed,
                "config_digest": digest, "truncated": run.truncated,
                "final_labeled": run.final_labeled,
            }, indent=None) + "\n")
        timing[strategy] = sum(r.duration_s for r in runs)
        final = sum(r.records[-1].cum_reward for r in runs) / len(runs)
        print(f"{strategy:16s} mean final cumulated reward: {final:g} "
              f"({len(runs)} seed{'s' if len(runs) > 1 else ''})")

    table = aggregate_replications(results)
    export_curves(table, out_dir / "curves.csv")
    render_curves(table, out_dir / "curves.png",
                  title=f"{dataset.name} scenario {values['scenario']}")
    (out_dir / "timing.json").write_text(json.dumps({
        "wall_clock_s": time.perf_counter() - started,
        "per_strategy_s": timing,
    }, indent=2) + "\n")
    print(f"artifacts in {out_dir}")
    return 0


def cmd_compare(args) -> int:
    tables = []
    for run_dir in args.run_dirs:
        path = Path(run_dir) / "curves.csv"
        if not path.exists():
            raise DataError(f"no curves.csv under {run_dir}")
        tables.append((Path(run_dir), read_curves(path)))
    horizons = {max(p.t for p in table) for _, table in tables}
    if len(horizons) != 1:
        raise DataError(f"mismatched horizons across run dirs: {sorted(horizons)}")
    horizon = horizons.pop()

    rows = []
    for run_dir, table in tables:
        finals = [p for p in table if p.t == horizon]
        for point in finals:
            rows.append((point.mean_cum_reward, point.sd, point.strategy, str(run_dir)))
    rows.sort(key=lambda r: -r[0])
    print(f"final mean cumulated reward at t={horizon}")
    lines = ["rank,strategy,run_dir,mean_cum_reward,sd"]
    for rank, (mean, sd, strategy, run_dir) in enumerate(rows, start=1):
        print(f"{rank:3d}. {strategy:16s} {mean:10.3f} +/- {sd:.3f}   ({run_dir})")
        lines.append(f"{rank},{strategy},{run_dir},{mean!r},{sd!r}")
    out = Path(args.out) if args.out else Path(args.run_dirs[0]) / "comparison.csv"
    out.write_text("\n".join(lines) + "\n")
    print(f"comparison table written to {out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    file_values = load_config_file(args.config) if args.config else {}
    app = create_app(default_config=file_values, sessions_dir=args.sessions_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fraudtriage",
        description="Sequential fraud triage: strategies, mixing, and oracle service.")
    sub = parser.add_subparsers(dest="verb", required=True)

    prep = sub.add_parser("prepare-data", help="normalize a raw dataset")
    prep.add_argument("name", choices=PREPARED_DATASETS)
    prep.add_argument("--raw", help="path to the raw file (not needed for synth)")
    prep.add_argument("--out", required=True, help="canonical CSV destination")
    prep.set_defaults(func=cmd_prepare_data)

    run = sub.add_parser("run", help="run strategies and export curves")
    run.add_argument("--config", help="key=value config file")
    run.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./runs)")
    run.add_argument("--jobs", type=int, default=1, help="parallel replication workers")
    run.add_argument("overrides", nargs="*", metavar="key=value",
                     help="config overrides, e.g. seed=7 cafda.k0=0.85")
    run.set_defaults(func=cmd_run)

    comp = sub.add_parser("compare", help="rank run directories by final reward")
    comp.add_argument("run_dirs", nargs="+", help="directories produced by `run`")
    comp.add_argument("--out", help="comparison CSV path")
    comp.set_defaults(func=cmd_compare)

    serve = sub.add_parser("serve", help="start the interactive oracle service")
    serve.add_argument("--config", help="default session config file")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--sessions-dir", help="directory for session logs")
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
