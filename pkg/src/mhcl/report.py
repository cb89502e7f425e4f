"""Render sweep figures from a metrics CSV.

The CSV is the contract; these plots are a convenience rendering of its
aggregate rows.  Four figures are written next to the CSV (or to --outdir):
setup time, control-message counts, addressing rate, and top-down delivery
rate, each against network size with 95% confidence error bars.
"""

from __future__ import annotations

import csv
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _load_aggregates(csv_path: str):
    """Group mean/ci95 rows by (topology, mode, failure) series."""
    series = defaultdict(dict)
    with open(csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            if row["seed"] not in ("mean", "ci95"):
                continue
            failure = row["scenario_id"].rsplit("-", 1)[-1]
            key = (row["topology"], row["mode"], failure)
            n = int(row["n"])
            series[key].setdefault(n, {})[row["seed"]] = row
    return series


def _plot(series, column, ylabel, title, path, *, combine_counts=False):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for (topology, mode, failure), by_n in sorted(series.items()):
        xs, means, halves = [], [], []
        for n in sorted(by_n):
            pair = by_n[n]
            if "mean" not in pair:
                continue
            xs.append(n)
            if combine_counts:
                means.append(float(pair["mean"]["dio_count"]) +
                             float(pair["mean"]["dao_count"]))
                halves.append((float(pair["ci95"]["dio_count"]) +
                               float(pair["ci95"]["dao_count"]))
                              if "ci95" in pair else 0.0)
            else:
                means.append(float(pair["mean"][column]))
                halves.append(float(pair["ci95"][column]) if "ci95" in pair else 0.0)
        label = f"{mode} {topology}" + ("" if failure == "none" else f" ({failure})")
        ax.errorbar(xs, means, yerr=halves, marker="o", capsize=3, label=label)
    ax.set_xlabel("network size n")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_report(csv_path: str, outdir: str | None = None) -> list[str]:
    """Write the four standard figures; returns the created file paths."""
    outdir = outdir or (os.path.dirname(os.path.abspath(csv_path)) or ".")
    os.makedirs(outdir, exist_ok=True)
    series = _load_aggregates(csv_path)
    if not series:
        raise ValueError(f"{csv_path}: no aggregate (mean/ci95) rows found; "
                         "run a sweep with at least one seed first")
    jobs = [
        ("setup_ms", "setup time [ms]", "Network setup time", "setup_time.png", False),
        (None, "control messages (with acks)", "Control-message totals",
         "control_messages.png", True),
        ("addr_rate", "addressing rate", "Addressing rate", "addressing_rate.png", False),
        ("down_rate", "delivery rate", "Top-down delivery rate", "down_delivery.png", False),
    ]
    created = []
    for column, ylabel, title, filename, combine in jobs:
        path = os.path.join(outdir, filename)
        _plot(series, column, ylabel, title, path, combine_counts=combine)
        created.append(path)
    return created
