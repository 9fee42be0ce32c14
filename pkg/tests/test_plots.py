"""Figure files are produced and non-trivial."""
from __future__ import annotations

import pytest

from editgen.metrics import EvalReport, OpStats
from editgen.plots import plot_metric_summary, plot_op_stats, plot_training_curves


def test_training_curves_written(tmp_path):
    rows = [(100, 12.0, 20.0, 0.1), (200, 6.0, 55.0, 0.4), (300, 3.0, 80.0, 0.8)]
    out = plot_training_curves(rows, tmp_path / "curves.png")
    assert out.exists() and out.stat().st_size > 1000


def test_training_curves_need_rows(tmp_path):
    with pytest.raises(ValueError):
        plot_training_curves([], tmp_path / "never.png")


def test_metric_summary_with_and_without_cpr(tmp_path):
    with_cpr = EvalReport(bleu=72.5, ribes_s=0.9, cpr=0.95)
    without = EvalReport(bleu=72.5, ribes_s=0.9)
    a = plot_metric_summary(with_cpr, tmp_path / "a.png")
    b = plot_metric_summary(without, tmp_path / "b.png")
    assert a.exists() and b.exists()


def test_op_stats_chart(tmp_path):
    ops = OpStats(iterations=2.5, repositions=1.0, deletions=0.5, insertions=7.0, wall_ms=3.0)
    out = plot_op_stats(ops, tmp_path / "ops.png")
    assert out.exists() and out.stat().st_size > 1000
