"""Figure rendering for the report path: every emitted CSV gets a PNG
companion. Uses the Agg backend so nothing needs a display.
"""

from __future__ import annotations

import csv
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def _rolling_mean(values, window: int) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if len(v) < window:
        return v
    kernel = np.ones(window) / window
    return np.convolve(v, kernel, mode="valid")


def render_reward_curves(csv_path, out_path, window: int = 200):
    """Smoothed success-rate (1 - response) per method over iterations."""
    curves = defaultdict(list)
    with open(csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            curves[(row["method"], row["seed"])].append(1 - int(row["reward"]))
    fig, ax = plt.subplots(figsize=(7, 4))
    for (method, seed), vals in sorted(curves.items()):
        ax.plot(_rolling_mean(vals, window), label=f"{method} (seed {seed})")
    ax.set_xlabel("iteration")
    ax.set_ylabel(f"success rate (rolling mean, window {window})")
    ax.set_title("Reward curves")
    if curves:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def render_best_mos(csv_path, out_path):
    """Best-so-far sum MOS per method over iterations."""
    curves = defaultdict(list)
    with open(csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            curves[(row["method"], row["seed"])].append(float(row["best_sum_mos"]))
    fig, ax = plt.subplots(figsize=(7, 4))
    for (method, seed), vals in sorted(curves.items()):
        ax.plot(vals, label=f"{method} (seed {seed})")
    ax.set_xlabel("iteration")
    ax.set_ylabel("best sum MOS so far")
    ax.set_title("Best placement objective over training")
    if curves:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def render_mos_heatmap(csv_path, out_path):
    xs, ys, ms = [], [], []
    with open(csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            xs.append(float(row["x_m"]))
            ys.append(float(row["y_m"]))
            ms.append(float(row["mos"]))
    fig, ax = plt.subplots(figsize=(6, 5))
    if xs:
        res = int(round(np.sqrt(len(xs))))
        grid = np.asarray(ms).reshape(res, res)
        im = ax.imshow(grid, origin="lower", cmap="viridis",
                       extent=[0, max(xs) + min(xs), 0, max(ys) + min(ys)],
                       vmin=1.0, vmax=5.0)
        fig.colorbar(im, ax=ax, label="MOS")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_title("MOS across the region")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def render_la_convergence(csv_path, out_path):
    """Histogram of each visited state's max action probability."""
    best = defaultdict(float)
    with open(csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["seed"], row["state_key"])
            best[key] = max(best[key], float(row["prob"]))
    fig, ax = plt.subplots(figsize=(6, 4))
    if best:
        ax.hist(list(best.values()), bins=20, range=(0.0, 1.0), color="tab:blue")
    ax.set_xlabel("max action probability per visited state")
    ax.set_ylabel("states")
    ax.set_title("Learning-automata convergence")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def render_runs_summary(csv_path, out_path):
    """Median sum MOS per method (and per sweep value when sweeping)."""
    data = defaultdict(list)
    with open(csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            data[(row["method"], float(row["sweep_value"]))].append(
                float(row["sum_mos"]))
    methods = sorted({m for m, _ in data})
    values = sorted({v for _, v in data})
    fig, ax = plt.subplots(figsize=(7, 4))
    if len(values) > 1:
        for m in methods:
            medians = [np.median(data[(m, v)]) for v in values if (m, v) in data]
            ax.plot(values[: len(medians)], medians, marker="o", label=m)
        ax.set_xlabel("sweep value")
    else:
        medians = [np.median(data[(m, values[0])]) if values else 0 for m in methods]
        ax.bar(methods, medians, color="tab:blue")
    ax.set_ylabel("median sum MOS")
    ax.set_title("Scheme comparison")
    if len(values) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def render_all(out_dir) -> list[str]:
    """Render a PNG next to every known CSV present in out_dir."""
    plan = [
        ("runs.csv", "runs_summary.png", render_runs_summary),
        ("reward_curves.csv", "reward_curves.png", render_reward_curves),
        ("reward_curves.csv", "best_mos_curves.png", render_best_mos),
        ("mos_heatmap.csv", "mos_heatmap.png", render_mos_heatmap),
        ("la_convergence.csv", "la_convergence.png", render_la_convergence),
    ]
    written = []
    for src, dst, fn in plan:
        src_path = os.path.join(out_dir, src)
        if os.path.exists(src_path):
            dst_path = os.path.join(out_dir, dst)
            fn(src_path, dst_path)
            written.append(dst_path)
    return written
