"""Figure rendering for run artifacts: cumulative-reward curves per strategy."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .harness import CurvePoint


def render_curves(table: list[CurvePoint], path: str | Path,
                  title: str = "Cumulated reward") -> Path:
    """Draw mean cumulative-reward curves with min/max bands, one line per strategy."""
    by_strategy: dict[str, list[CurvePoint]] = defaultdict(list)
    for point in table:
        by_strategy[point.strategy].append(point)

    fig, ax = plt.subplots(figsize=(7.5, 5.0))
    for strategy, points in by_strategy.items():
        points = sorted(points, key=lambda p: p.t)
        ts = [p.t for p in points]
        means = [p.mean_cum_reward for p in points]
        line, = ax.plot(ts, means, label=strategy, linewidth=1.6)
        ax.fill_between(ts, [p.min for p in points], [p.max for p in points],
                        color=line.get_color(), alpha=0.15, linewidth=0)
    ax.set_xlabel("oracle queries")
    ax.set_ylabel("cumulated reward")
    ax.set_title(title)
    ax.legend(loc="upper left", fontsize=9)
    ax.grid(alpha=0.3)
    path = Path(path)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def render_weight_history(weight_rows: list[list[float]], expert_names: list[str],
                          path: str | Path) -> Path:
    """Stacked strategy-weight trajectory for a single mixture run."""
    fig, ax = plt.subplots(figsize=(7.5, 3.5))
    ts = range(1, len(weight_rows) + 1)
    series = list(zip(*weight_rows)) if weight_rows else []
    if series:
        ax.stackplot(ts, series, labels=expert_names, alpha=0.85)
        ax.legend(loc="upper right", fontsize=8, ncol=min(len(expert_names), 3))
    ax.set_xlabel("oracle queries")
    ax.set_ylabel("strategy weight")
    ax.set_ylim(0, 1)
    path = Path(path)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path
