"""Corpus metrics for generated token lines.

All metrics work on whitespace-tokenized strings so that the harness can
score either raw id streams or detokenized text, and none of them smooth:
reported numbers are exactly what the counts give.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .decoding import DecodeTrace


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(hyps: list[str], refs: list[str]) -> float:
    """Corpus BLEU-4, unsmoothed, times the brevity penalty, in [0, 100].

    N-gram orders with no hypothesis n-grams anywhere drop out of the
    geometric mean; an order that has candidates but zero matches sends the
    whole score to zero.
    """
    if len(hyps) != len(refs):
        raise ValueError(f"line counts differ: {len(hyps)} hyps vs {len(refs)} refs")
    hyp_toks = [h.split() for h in hyps]
    ref_toks = [r.split() for r in refs]
    hyp_len = sum(len(t) for t in hyp_toks)
    ref_len = sum(len(t) for t in ref_toks)
    if hyp_len == 0:
        return 0.0
    log_p_sum = 0.0
    for n in range(1, 5):
        total = sum(max(len(t) - n + 1, 0) for t in hyp_toks)
        if total == 0:
            continue  # contributes log 1
        clipped = 0
        for h, r in zip(hyp_toks, ref_toks):
            hc = _ngrams(h, n)
            rc = _ngrams(r, n)
            clipped += sum(min(c, rc[g]) for g, c in hc.items())
        if clipped == 0:
            return 0.0
        log_p_sum += math.log(clipped / total)
    bp = math.exp(min(0.0, 1.0 - ref_len / hyp_len))
    return 100.0 * bp * math.exp(log_p_sum / 4.0)


def ribes_simplified(hyp: str, ref: str) -> float:
    """Rank-correlation score over unigrams unique to both lines, in [0, 1].

    Fewer than two such anchors gives 0. Otherwise the normalized Kendall
    tau of their orders is damped by unigram precision to the 1/4 power.
    """
    hyp_toks = hyp.split()
    ref_toks = ref.split()
    hyp_counts = Counter(hyp_toks)
    ref_counts = Counter(ref_toks)
    matched = [
        t for t in hyp_toks if hyp_counts[t] == 1 and ref_counts[t] == 1
    ]
    if len(matched) < 2:
        return 0.0
    ref_rank = {t: ref_toks.index(t) for t in matched}
    ranks = [ref_rank[t] for t in matched]  # in hyp order
    m = len(ranks)
    concordant = sum(
        1 for i in range(m) for j in range(i + 1, m) if ranks[i] < ranks[j]
    )
    pairs = m * (m - 1) // 2
    tau = (2 * concordant - pairs) / pairs
    nkt = (tau + 1.0) / 2.0
    precision = m / len(hyp_toks)
    return nkt * precision**0.25


def ribes_corpus(hyps: list[str], refs: list[str]) -> float:
    if len(hyps) != len(refs):
        raise ValueError(f"line counts differ: {len(hyps)} hyps vs {len(refs)} refs")
    if not hyps:
        raise ValueError("empty corpus")
    return sum(ribes_simplified(h, r) for h, r in zip(hyps, refs)) / len(hyps)


def cpr(hyps: list[str], constraint_sets: list[list[list[str]]]) -> float | None:
    """Fraction of constraint tokens that appear in the paired hypothesis.

    Counted per token type with clipping, so a constraint token demanded
    twice needs two occurrences. Returns None when there are no constraint
    tokens at all (the report then omits the field).
    """
    if len(hyps) != len(constraint_sets):
        raise ValueError(
            f"line counts differ: {len(hyps)} hyps vs {len(constraint_sets)} constraint lines"
        )
    total = 0
    preserved = 0
    for hyp, phrases in zip(hyps, constraint_sets):
        want = Counter(tok for phrase in phrases for tok in phrase)
        if not want:
            continue
        have = Counter(hyp.split())
        total += sum(want.values())
        preserved += sum(min(c, have[t]) for t, c in want.items())
    if total == 0:
        return None
    return preserved / total


@dataclass(frozen=True)
class OpStats:
    iterations: float
    repositions: float
    deletions: float
    insertions: float
    wall_ms: float


def op_stats(traces: list[DecodeTrace]) -> OpStats:
    """Arithmetic mean of every trace field over the corpus."""
    if not traces:
        raise ValueError("no traces to average")
    n = len(traces)
    return OpStats(
        iterations=sum(t.iterations for t in traces) / n,
        repositions=sum(t.repositions for t in traces) / n,
        deletions=sum(t.deletions for t in traces) / n,
        insertions=sum(t.insertions for t in traces) / n,
        wall_ms=sum(t.wall_ms for t in traces) / n,
    )


@dataclass(frozen=True)
class EvalReport:
    bleu: float
    ribes_s: float
    cpr: float | None = None
    ops: OpStats | None = None


def evaluate_corpus(
    hyps: list[str],
    refs: list[str],
    constraint_sets: list[list[list[str]]] | None = None,
    traces: list[DecodeTrace] | None = None,
) -> EvalReport:
    return EvalReport(
        bleu=bleu(hyps, refs),
        ribes_s=ribes_corpus(hyps, refs),
        cpr=None if constraint_sets is None else cpr(hyps, constraint_sets),
        ops=None if traces is None else op_stats(traces),
    )


def render_report(report: EvalReport) -> list[str]:
    """Tab-separated metric/value lines; omitted metrics produce no line."""
    lines = [
        f"bleu\t{report.bleu:.4f}",
        f"ribes_s\t{report.ribes_s:.4f}",
    ]
    if report.cpr is not None:
        lines.append(f"cpr\t{report.cpr:.4f}")
    if report.ops is not None:
        ops = report.ops
        lines.extend(
            [
                f"mean_iterations\t{ops.iterations:.4f}",
                f"mean_repositions\t{ops.repositions:.4f}",
                f"mean_deletions\t{ops.deletions:.4f}",
                f"mean_insertions\t{ops.insertions:.4f}",
                f"mean_latency_ms\t{ops.wall_ms:.4f}",
            ]
        )
    return lines
