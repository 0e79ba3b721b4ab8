"""Benchmark reporting: delimited output plus a rendered figure."""

from __future__ import annotations

import csv
from typing import Sequence

BENCH_COLUMNS = [
    "algorithm",
    "source",
    "target",
    "departure",
    "labels",
    "total_us",
    "init_us",
    "collect_us",
    "scan_us",
    "relax_us",
]


def write_bench_csv(rows: Sequence[dict], path: str) -> None:
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=BENCH_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow({k: row.get(k, 0) for k in BENCH_COLUMNS})


def render_bench_figure(rows: Sequence[dict], path: str) -> None:
    """Stacked per-phase mean query times, one bar per algorithm."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    phases = ["init_us", "collect_us", "scan_us", "relax_us"]
    algorithms = sorted({r["algorithm"] for r in rows})
    means = {
        alg: [
            sum(int(r[p]) for r in rows if r["algorithm"] == alg)
            / max(1, sum(1 for r in rows if r["algorithm"] == alg))
            for p in phases
        ]
        for alg in algorithms
    }

    fig, ax = plt.subplots(figsize=(max(4, 1.2 * len(algorithms)), 4))
    bottoms = [0.0] * len(algorithms)
    for i, phase in enumerate(phases):
        heights = [means[a][i] for a in algorithms]
        ax.bar(algorithms, heights, bottom=bottoms, label=phase.removesuffix("_us"))
        bottoms = [b + h for b, h in zip(bottoms, heights)]
    ax.set_ylabel("mean query time [us]")
    ax.set_title("query time by phase")
    ax.legend()
    ax.tick_params(axis="x", rotation=20)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
