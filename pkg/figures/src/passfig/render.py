"""Figure kinds over the simulator's CSV artifacts.

Strictly read-only post-processing: every renderer validates its input
schema first, draws with a fixed style (no timestamps, no randomness), and
writes the image atomically, so reruns on identical inputs are
byte-identical and failures never leave partial files.
"""

from __future__ import annotations

import csv
import os
from collections import defaultdict
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

KINDS = ("curve", "bars", "cdf", "snapshot", "heatmap")

METHOD_COLORS = {"fixed": "#7f7f7f", "random": "#1f77b4", "sac": "#d62728"}
FIG_DPI = 120


class SchemaError(ValueError):
    """Input CSV missing, empty, or with unexpected columns."""


@dataclass
class FigureSpec:
    kind: str                 # curve | bars | cdf | snapshot | heatmap
    inputs: dict              # role -> CSV path (roles are kind-specific)
    output: str               # image path (.png)
    options: dict = field(default_factory=dict)


def read_rows(path: str, columns: list[str]) -> list[dict]:
    """DictReader with exact-header validation; empty data is an error."""
    if not os.path.exists(path):
        raise SchemaError(f"{path}: no such file")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise SchemaError(f"{path}: empty file, expected columns {columns}")
        missing = [c for c in columns if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column {missing[0]!r}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _save(fig, path: str) -> None:
    tmp = path + ".tmp"
    fig.savefig(tmp, dpi=FIG_DPI, format="png",
                metadata={"Software": "passim-figures"})
    plt.close(fig)
    os.replace(tmp, path)


def _methods_in(rows):
    seen = []
    for row in rows:
        if row["method"] not in seen:
            seen.append(row["method"])
    return seen


def render_curve(spec: FigureSpec) -> None:
    rows = read_rows(spec.inputs["training_curve"],
                     ["episode", "steps", "mean_reward", "sum_se",
                      "critic_loss", "actor_loss", "alpha"])
    episodes = np.array([int(r["episode"]) for r in rows])
    sum_se = np.array([float(r["sum_se"]) for r in rows])
    reward = np.array([float(r["mean_reward"]) for r in rows])
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax1.plot(episodes, sum_se, color=METHOD_COLORS["sac"], lw=1.0)
    ax1.set_ylabel("episode sum SE (bits/s/Hz)")
    ax1.grid(alpha=0.3)
    ax2.plot(episodes, reward, color="#2ca02c", lw=1.0)
    ax2.set_ylabel("mean step reward")
    ax2.set_xlabel("episode")
    ax2.grid(alpha=0.3)
    fig.suptitle("Training progress")
    _save(fig, spec.output)


def render_bars(spec: FigureSpec) -> None:
    rows = read_rows(spec.inputs["eval_episodes"],
                     ["method", "seed", "episode", "sum_se"])
    acc = defaultdict(list)
    for r in rows:
        acc[(r["method"], int(r["seed"]))].append(float(r["sum_se"]))
    methods = _methods_in(rows)
    seeds = sorted({s for _, s in acc})
    width = 0.8 / len(methods)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for i, method in enumerate(methods):
        means = [float(np.mean(acc[(method, s)])) for s in seeds]
        pos = np.arange(len(seeds)) + (i - (len(methods) - 1) / 2) * width
        ax.bar(pos, means, width=width, label=method,
               color=METHOD_COLORS.get(method))
    ax.set_xticks(np.arange(len(seeds)))
    ax.set_xticklabels([f"seed {s}" for s in seeds])
    ax.set_ylabel("mean episode sum SE (bits/s/Hz)")
    ax.set_title("Per-seed comparison")
    ax.legend()
    ax.grid(axis="y", alpha=0.3)
    _save(fig, spec.output)


def render_cdf(spec: FigureSpec) -> None:
    rows = read_rows(spec.inputs["cdf"], ["method", "value", "fraction"])
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for method in _methods_in(rows):
        pts = [(float(r["value"]), float(r["fraction"])) for r in rows
               if r["method"] == method]
        values = [v for v, _ in pts]
        fractions = [f for _, f in pts]
        if fractions != sorted(fractions):
            raise SchemaError(f"cdf fractions for {method!r} are not monotone")
        ax.step(values, fractions, where="post", label=method,
                color=METHOD_COLORS.get(method))
    ax.set_xlabel("episode sum SE (bits/s/Hz)")
    ax.set_ylabel("empirical CDF")
    ax.set_ylim(0.0, 1.02)
    ax.set_title("Episode sum SE distribution")
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, spec.output)


def render_snapshot(spec: FigureSpec) -> None:
    rows = read_rows(spec.inputs["case_study"],
                     ["step", "entity_type", "index", "x", "y"])
    step = int(spec.options["step"])
    here = [r for r in rows if int(r["step"]) == step]
    if not here:
        raise SchemaError(f"case_study has no rows for step {step}")
    users = [(float(r["x"]), float(r["y"])) for r in here
             if r["entity_type"] == "user"]
    pas = [(float(r["x"]), float(r["y"])) for r in here
           if r["entity_type"] == "pa"]
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    for _, y in pas:  # waveguides run the full x extent at each PA's y
        ax.axhline(y, color="#cccccc", lw=1.0, zorder=0)
    if users:
        ax.scatter(*zip(*users), marker="o", s=80, color="#1f77b4",
                   label="users", zorder=2)
    if pas:
        ax.scatter(*zip(*pas), marker="^", s=90, color="#ff7f0e",
                   label="PAs", zorder=3)
    ax.set_xlim(0, 100)
    ax.set_ylim(0, 100)
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_title(f"Positions at t = {step}")
    ax.legend(loc="upper right")
    _save(fig, spec.output)


def render_heatmap(spec: FigureSpec) -> None:
    rows = read_rows(spec.inputs["power_alloc"], ["step", "n", "k", "w_sq"])
    step = int(spec.options["step"])
    here = [r for r in rows if int(r["step"]) == step]
    if not here:
        raise SchemaError(f"power_alloc has no rows for step {step}")
    n_max = max(int(r["n"]) for r in here) + 1
    k_max = max(int(r["k"]) for r in here) + 1
    grid = np.zeros((n_max, k_max))
    for r in here:
        grid[int(r["n"]), int(r["k"])] = float(r["w_sq"])
    fig, ax = plt.subplots(figsize=(4.8, 4.2))
    im = ax.imshow(grid, cmap="viridis", vmin=0.0)
    ax.set_xticks(range(k_max))
    ax.set_xticklabels([f"user {k}" for k in range(k_max)])
    ax.set_yticks(range(n_max))
    ax.set_yticklabels([f"PA {n}" for n in range(n_max)])
    for n in range(n_max):
        for k in range(k_max):
            ax.text(k, n, f"{grid[n, k]:.2f}", ha="center", va="center",
                    color="white" if grid[n, k] < grid.max() * 0.6 else "black",
                    fontsize=8)
    fig.colorbar(im, ax=ax, label="|W_nk|^2")
    ax.set_title(f"Precoder power at t = {step}")
    _save(fig, spec.output)


_RENDERERS = {"curve": render_curve, "bars": render_bars, "cdf": render_cdf,
              "snapshot": render_snapshot, "heatmap": render_heatmap}


def render(spec: FigureSpec) -> str:
    """Render one figure; returns the output path."""
    if spec.kind not in _RENDERERS:
        raise ValueError(f"unknown figure kind {spec.kind!r}")
    _RENDERERS[spec.kind](spec)
    return spec.output


def snapshot_steps(case_study_path: str) -> list[int]:
    rows = read_rows(case_study_path, ["step", "entity_type", "index", "x", "y"])
    return sorted({int(r["step"]) for r in rows})


def power_steps(power_alloc_path: str) -> list[int]:
    rows = read_rows(power_alloc_path, ["step", "n", "k", "w_sq"])
    return sorted({int(r["step"]) for r in rows})
