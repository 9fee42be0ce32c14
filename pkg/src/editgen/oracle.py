"""Edit-distance oracle under the constrained substitution rule.

Substituting position i with reference token y*_j is free when the tokens
already agree, costs 1 when y*_j occurs anywhere in the input (reposition
can fetch it), and is forbidden otherwise.  Deletion and insertion cost 1.
The minimum-cost monotone script is converted into a single edit action
whose application reproduces the reference exactly.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

from .edits import K_MAX, Action, apply_action
from .vocab import Sequence

logger = logging.getLogger(__name__)

INF = float("inf")


class EditOp(NamedTuple):
    kind: str  # "match" | "substitute" | "delete" | "insert"
    src_pos: int  # 1-based position in the input, 0 for inserts
    ref_pos: int  # 1-based position in the reference, 0 for deletes


@dataclass(frozen=True)
class EditScript:
    ops: tuple[EditOp, ...]

    @property
    def cost(self) -> int:
        return sum(1 for op in self.ops if op.kind != "match")


def _sub_cost(src_id: int, ref_id: int, src_members: frozenset[int]) -> float:
    if src_id == ref_id:
        return 0.0
    if ref_id in src_members:
        return 1.0
    return INF


def align(src: Sequence, ref: Sequence) -> EditScript:
    """Minimum-cost monotone script from src to ref.

    Backtrace ties prefer match/substitute over delete over insert, which
    keeps boundary tokens paired with each other.
    """
    y, r = src.ids, ref.ids
    n, m = len(y), len(r)
    members = frozenset(y)
    dist = [[0.0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = float(i)
    for j in range(1, m + 1):
        dist[0][j] = float(j)
    for i in range(1, n + 1):
        row, above = dist[i], dist[i - 1]
        yi = y[i - 1]
        for j in range(1, m + 1):
            best = above[j - 1] + _sub_cost(yi, r[j - 1], members)
            if above[j] + 1.0 < best:
                best = above[j] + 1.0
            if row[j - 1] + 1.0 < best:
                best = row[j - 1] + 1.0
            row[j] = best

    ops: list[EditOp] = []
    i, j = n, m
    while i > 0 or j > 0:
        here = dist[i][j]
        if i > 0 and j > 0:
            sub = _sub_cost(y[i - 1], r[j - 1], members)
            if sub < INF and dist[i - 1][j - 1] + sub == here:
                kind = "match" if sub == 0.0 else "substitute"
                ops.append(EditOp(kind, i, j))
                i, j = i - 1, j - 1
                continue
        if i > 0 and dist[i - 1][j] + 1.0 == here:
            ops.append(EditOp("delete", i, 0))
            i -= 1
            continue
        ops.append(EditOp("insert", 0, j))
        j -= 1
    ops.reverse()
    return EditScript(tuple(ops))


def num_ops(src: Sequence, ref: Sequence) -> int:
    return align(src, ref).cost


def brute_force_oracle(src: Sequence, ref: Sequence) -> int:
    """Reference implementation: enumerate every monotone script directly.

    Plain recursion with no memoization, so it shares no machinery with
    align().  Exponential; intended for sequences of length <= 8 or so.
    """
    y, r = src.ids, ref.ids
    members = frozenset(y)

    def best(i: int, j: int) -> float:
        if i == 0 and j == 0:
            return 0.0
        out = INF
        if i > 0:
            out = min(out, best(i - 1, j) + 1.0)
        if j > 0:
            out = min(out, best(i, j - 1) + 1.0)
        if i > 0 and j > 0:
            sub = _sub_cost(y[i - 1], r[j - 1], members)
            if sub < INF:
                out = min(out, best(i - 1, j - 1) + sub)
        return out

    return int(best(len(y), len(r)))


@dataclass(frozen=True)
class OracleResult:
    script: EditScript
    action: Action
    reposition_targets: tuple[int, ...]
    placeholder_targets: tuple[int, ...]
    token_targets: tuple[int, ...]


def oracle_action(src: Sequence, ref: Sequence) -> OracleResult:
    """Convert the minimum-cost script into one exact-round-trip action.

    Match slots keep their own index.  Substitute slots take the smallest
    matching input index not yet claimed; match indices are reserved up
    front so substitutes never steal them.  If every occurrence is taken
    the smallest one is reused (logged; the round trip stays exact).
    """
    script = align(src, ref)
    y, r_ids = src.ids, ref.ids
    n = len(y)

    occurrences: dict[int, list[int]] = {}
    for pos, tok in enumerate(y, start=1):
        occurrences.setdefault(tok, []).append(pos)
    used = {op.src_pos for op in script.ops if op.kind == "match"}

    reposition = [0] * n
    inserted: list[int] = []
    survivor_count = sum(
        1 for op in script.ops if op.kind in ("match", "substitute")
    )
    gap_counts = [0] * (survivor_count - 1)
    diag_seen = 0
    for op in script.ops:
        if op.kind == "match":
            reposition[op.src_pos - 1] = op.src_pos
            diag_seen += 1
        elif op.kind == "substitute":
            wanted = r_ids[op.ref_pos - 1]
            candidates = occurrences[wanted]
            free = [p for p in candidates if p not in used]
            if free:
                chosen = free[0]
            else:
                chosen = candidates[0]
                logger.debug(
                    "substitute reuses input position %d (token %d)", chosen, wanted
                )
            used.add(chosen)
            reposition[op.src_pos - 1] = chosen
            diag_seen += 1
        elif op.kind == "insert":
            gap_counts[diag_seen - 1] += 1
            inserted.append(r_ids[op.ref_pos - 1])
        # deletes leave reposition[src_pos - 1] at 0

    action = Action(
        reposition=tuple(reposition),
        placeholders=tuple(min(c, K_MAX) for c in gap_counts),
        fills=tuple(inserted),
    )
    assert apply_action(src, action).ids == ref.ids
    return OracleResult(
        script=script,
        action=action,
        reposition_targets=action.reposition,
        placeholder_targets=action.placeholders,
        token_targets=action.fills,
    )


def insert_counts_by_source_gap(script: EditScript, src_len: int) -> tuple[int, ...]:
    """Placeholder counts over the *input's* gaps implied by a script.

    Used by the reposition-path roll-in: insertions are credited to the gap
    after the last consumed input position, so the counts type-check with
    apply_placeholders on the unmodified input.
    """
    counts = [0] * (src_len - 1)
    consumed = 0
    for op in script.ops:
        if op.kind == "insert":
            if not 1 <= consumed <= src_len - 1:
                raise ValueError("insert outside the input's interior gaps")
            counts[consumed - 1] += 1
        else:
            consumed += 1
    return tuple(min(c, K_MAX) for c in counts)
