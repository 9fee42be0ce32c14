"""Frozen-value checks for the corpus metrics."""
from __future__ import annotations

import math

import pytest

from editgen.decoding import DecodeTrace
from editgen.metrics import (
    EvalReport,
    bleu,
    cpr,
    evaluate_corpus,
    op_stats,
    render_report,
    ribes_corpus,
    ribes_simplified,
)


def test_bleu_identity_is_100():
    corpus = ["a b c d e", "f g h"]
    assert bleu(corpus, corpus) == pytest.approx(100.0)


def test_bleu_zero_when_a_used_order_has_no_matches():
    # all unigrams through trigrams match, the single 4-gram does not
    assert bleu(["a b c d"], ["a b c e"]) == 0.0


def test_bleu_short_hypothesis_closed_form():
    # both available orders are perfect, brevity penalty is e^{1 - 4/2}
    assert bleu(["a b"], ["a b c d"]) == pytest.approx(100.0 * math.exp(-1.0), abs=1e-9)


def test_bleu_empty_hypothesis_is_zero():
    assert bleu([""], ["a b"]) == 0.0


def test_bleu_requires_aligned_corpora():
    with pytest.raises(ValueError, match="line counts"):
        bleu(["a"], ["a", "b"])


def test_bleu_invariant_under_corpus_reordering():
    hyps = ["a b c", "d e", "f g h i"]
    refs = ["a b d", "d e", "f h g i"]
    assert bleu(hyps, refs) == pytest.approx(bleu(hyps[::-1], refs[::-1]))


def test_ribes_identity_is_one():
    assert ribes_simplified("a b c", "a b c") == pytest.approx(1.0)


def test_ribes_reversal_is_zero():
    assert ribes_simplified("c b a", "a b c") == 0.0


def test_ribes_single_transposition():
    # one of three anchor pairs is discordant: tau 1/3, damped by p = 1
    assert ribes_simplified("a c b", "a b c") == pytest.approx(2.0 / 3.0, abs=1e-9)


def test_ribes_needs_two_unique_anchors():
    assert ribes_simplified("a a b", "a b") == 0.0
    assert ribes_simplified("", "a b") == 0.0


def test_ribes_precision_damping():
    # extra token drops unigram precision to 2/3
    got = ribes_simplified("a b x", "a b")
    assert got == pytest.approx((2.0 / 3.0) ** 0.25, abs=1e-9)


def test_ribes_invariant_under_token_renaming():
    a = ribes_simplified("a c b d", "a b c d")
    b = ribes_simplified("w y x z", "w x y z")
    assert a == pytest.approx(b)


def test_ribes_corpus_is_the_sentence_mean():
    got = ribes_corpus(["a b c", "c b a"], ["a b c", "a b c"])
    assert got == pytest.approx(0.5)
    with pytest.raises(ValueError):
        ribes_corpus([], [])


def test_cpr_values():
    assert cpr(["a b"], [[["a"], ["c"]]]) == pytest.approx(0.5)
    assert cpr(["a b c"], [[["a", "b"]]]) == pytest.approx(1.0)
    assert cpr(["a"], [[["a"], ["a"]]]) == pytest.approx(0.5)  # demanded twice
    assert cpr(["a b"], [[]]) is None
    with pytest.raises(ValueError, match="line counts"):
        cpr(["a"], [])


def test_op_stats_means_every_field():
    t1 = DecodeTrace(2, 1, 0, 3, 10.0)
    t2 = DecodeTrace(4, 3, 2, 5, 30.0)
    stats = op_stats([t1, t2])
    assert stats.iterations == 3.0
    assert stats.repositions == 2.0
    assert stats.deletions == 1.0
    assert stats.insertions == 4.0
    assert stats.wall_ms == 20.0
    assert op_stats([t1]).insertions == 3.0
    with pytest.raises(ValueError):
        op_stats([])


def test_evaluate_corpus_and_report_lines():
    report = evaluate_corpus(["a b"], ["a b"])
    lines = render_report(report)
    assert lines[0] == "bleu\t100.0000"
    assert not any(line.startswith("cpr") for line in lines)

    full = evaluate_corpus(
        ["a b"], ["a b"],
        constraint_sets=[[["a"]]],
        traces=[DecodeTrace(1, 0, 0, 2, 5.0)],
    )
    lines = render_report(full)
    assert "cpr\t1.0000" in lines
    assert "mean_insertions\t2.0000" in lines
    assert "mean_latency_ms\t5.0000" in lines


def test_report_requires_alignment():
    with pytest.raises(ValueError):
        evaluate_corpus(["a"], ["a", "b"])
    assert isinstance(evaluate_corpus(["x"], ["x"]), EvalReport)
