"""Figure rendering for training logs and evaluation reports.

Everything draws straight to a file with the Agg backend, so the functions
work in headless runs and never open a window.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import EvalReport, OpStats

MetricsRows = list[tuple[int, float, float, float]]


def plot_training_curves(rows: MetricsRows, out_path: str | Path) -> Path:
    """Loss on the left axis, validation BLEU and exact match on the right."""
    if not rows:
        raise ValueError("no metrics rows to plot")
    steps = [r[0] for r in rows]
    loss = [r[1] for r in rows]
    bleu = [r[2] for r in rows]
    exact = [100.0 * r[3] for r in rows]

    fig, ax_loss = plt.subplots(figsize=(7, 4.5))
    ax_loss.plot(steps, loss, color="tab:red", marker="o", label="train loss")
    ax_loss.set_xlabel("step")
    ax_loss.set_ylabel("train loss", color="tab:red")
    ax_loss.tick_params(axis="y", labelcolor="tab:red")

    ax_val = ax_loss.twinx()
    ax_val.plot(steps, bleu, color="tab:blue", marker="s", label="valid BLEU")
    ax_val.plot(steps, exact, color="tab:green", marker="^", label="valid exact %")
    ax_val.set_ylabel("validation score")
    ax_val.set_ylim(bottom=0)

    lines = ax_loss.get_lines() + ax_val.get_lines()
    ax_loss.legend(lines, [ln.get_label() for ln in lines], loc="center right")
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def plot_metric_summary(report: EvalReport, out_path: str | Path) -> Path:
    """Bar chart of the corpus metrics, all scaled to [0, 100]."""
    names = ["BLEU", "RIBES x100"]
    values = [report.bleu, 100.0 * report.ribes_s]
    if report.cpr is not None:
        names.append("CPR x100")
        values.append(100.0 * report.cpr)

    fig, ax = plt.subplots(figsize=(5.5, 4))
    bars = ax.bar(names, values, color=["tab:blue", "tab:orange", "tab:green"][: len(names)])
    ax.bar_label(bars, fmt="%.1f")
    ax.set_ylim(0, 105)
    ax.set_ylabel("score")
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def plot_op_stats(ops: OpStats, out_path: str | Path) -> Path:
    """Mean edit operations per sentence, one bar per operation kind."""
    names = ["iterations", "repositions", "deletions", "insertions"]
    values = [ops.iterations, ops.repositions, ops.deletions, ops.insertions]

    fig, ax = plt.subplots(figsize=(5.5, 4))
    bars = ax.bar(names, values, color="tab:purple")
    ax.bar_label(bars, fmt="%.2f")
    ax.set_ylabel("mean per sentence")
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
