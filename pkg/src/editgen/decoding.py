"""Iterative greedy refinement with optional lexical-constraint masking.

Each iteration runs the three heads in order (reposition, placeholder,
token fill), applying each phase before conditioning the next.  Decoding
stops when an iteration reproduces its input or when max_iters is reached.

Hard mode tracks, per constraint phrase, the 1-based positions its tokens
currently occupy, and enforces three rules: the delete outcome is masked at
constraint slots; a constraint position no slot selected is repaired to
keep its own position (multi-token phrases are pinned as blocks, which also
keeps their internal order and adjacency); and gaps inside a phrase are
forced to zero placeholders.  Every constraint token therefore survives to
the final output whatever the policy predicts.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .edits import Action, apply_placeholders, apply_reposition, fill_tokens
from .model import (
    Parameters,
    encode_source,
    placeholder_distribution,
    reposition_distribution,
    token_distribution,
)
from .vocab import BOS, EOS, ConstraintSet, Sequence

ConstraintPositions = list[list[int]]


@dataclass(frozen=True)
class DecodeConfig:
    max_iters: int = 10
    gamma: float = 0.0
    mode: str = "unconstrained"  # unconstrained | soft | hard

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0.0 <= self.gamma <= 3.0:
            raise ValueError("gamma must lie in [0, 3]")
        if self.mode not in ("unconstrained", "soft", "hard"):
            raise ValueError(f"unknown decode mode: {self.mode!r}")


@dataclass(frozen=True)
class DecodeTrace:
    iterations: int
    repositions: int  # slots moved somewhere new: r_i not in {0, i}
    deletions: int    # slots with r_i = 0
    insertions: int   # placeholders filled
    wall_ms: float

    def __post_init__(self) -> None:
        if min(self.iterations, self.repositions, self.deletions, self.insertions) < 0:
            raise ValueError("trace counts must be non-negative")


def seed_positions(constraints: ConstraintSet) -> ConstraintPositions:
    """Positions of each phrase inside its own seed sequence."""
    positions: ConstraintPositions = []
    cursor = 2  # first content position, 1-based
    for phrase in constraints.phrases:
        positions.append(list(range(cursor, cursor + len(phrase))))
        cursor += len(phrase)
    return positions


def mask_hard_constraints(
    dists: np.ndarray, positions: ConstraintPositions, phase: str
) -> np.ndarray:
    """Zero out forbidden outcomes for one phase; rows are renormalized."""
    out = dists.copy()
    if phase == "reposition":
        for phrase in positions:
            for pos in phrase:
                out[pos - 1, 0] = 0.0
                if out[pos - 1].sum() == 0.0:  # all mass was on delete
                    out[pos - 1, pos] = 1.0
        out /= out.sum(axis=1, keepdims=True)
    elif phase == "placeholder":
        for phrase in positions:
            for pos in phrase[:-1]:  # gaps inside the phrase
                out[pos - 1, :] = 0.0
                out[pos - 1, 0] = 1.0
    else:
        raise ValueError(f"unknown phase: {phase!r}")
    return out


def _repair_reposition(moves: list[int], positions: ConstraintPositions) -> list[int]:
    """Pin multi-token phrases to their own slots; re-keep any single
    constraint position that no slot selected.

    Repairing one position can orphan another (its only reference may have
    been the overwritten slot), so repairs loop to a fixed point; each pass
    permanently settles at least one position.
    """
    for phrase in positions:
        if len(phrase) > 1:
            for pos in phrase:
                moves[pos - 1] = pos
    singles = [phrase[0] for phrase in positions if len(phrase) == 1]
    changed = True
    while changed:
        changed = False
        used = set(moves)
        for pos in singles:
            if pos not in used:
                moves[pos - 1] = pos
                used.add(pos)
                changed = True
    return moves


def _remap_through_reposition(
    moves: list[int], positions: ConstraintPositions
) -> ConstraintPositions:
    rank = {}
    out_pos = 0
    for slot, m in enumerate(moves, start=1):
        if m != 0:
            out_pos += 1
            rank[slot] = out_pos
    remapped: ConstraintPositions = []
    for phrase in positions:
        if len(phrase) > 1:
            remapped.append([rank[p] for p in phrase])  # pinned, so present
        else:
            slots = [s for s, m in enumerate(moves, start=1) if m == phrase[0]]
            remapped.append([rank[slots[0]]])
    return remapped


def _remap_through_placeholders(
    counts: tuple[int, ...], positions: ConstraintPositions
) -> ConstraintPositions:
    prefix = np.concatenate([[0], np.cumsum(counts)])
    return [[p + int(prefix[p - 1]) for p in phrase] for phrase in positions]


def _clamp_counts(counts: np.ndarray, budget: int) -> tuple[int, ...]:
    """Cap total insertions so the grown sequence stays within L_max."""
    out = []
    remaining = max(budget, 0)
    for c in counts:
        c = int(min(c, remaining))
        out.append(c)
        remaining -= c
    return tuple(out)


def _greedy_step(
    params: Parameters,
    enc_out: np.ndarray,
    y: Sequence,
    cfg: DecodeConfig,
    positions: ConstraintPositions | None,
):
    """One refinement iteration. Returns (action, output, new positions)."""
    hard = cfg.mode == "hard" and positions is not None
    n = len(y)

    rps_dist = reposition_distribution(params, enc_out, y)
    if hard:
        rps_dist = mask_hard_constraints(rps_dist, positions, "reposition")
    moves = [int(m) for m in rps_dist.argmax(axis=1)]
    if hard:
        moves = _repair_reposition(moves, positions)
    survivors = apply_reposition(y, tuple(moves))
    if hard:
        positions = _remap_through_reposition(moves, positions)

    plh_dist = placeholder_distribution(params, enc_out, survivors)
    if cfg.gamma > 0.0:
        with np.errstate(divide="ignore"):
            scores = np.log(plh_dist)
        scores[:, 0] -= cfg.gamma
    else:
        scores = plh_dist
    if hard:
        scores = mask_hard_constraints(scores, positions, "placeholder")
    counts = _clamp_counts(scores.argmax(axis=1), params.config.l_max - len(survivors))
    slotted = apply_placeholders(survivors, counts)
    if hard:
        positions = _remap_through_placeholders(counts, positions)

    if sum(counts):
        tok_dist, _ = token_distribution(params, enc_out, slotted)
        fills = tuple(int(t) for t in tok_dist.argmax(axis=1))
    else:
        fills = ()
    out = fill_tokens(slotted, fills)
    return Action(tuple(moves), counts, fills), out, positions


def greedy_action(
    params: Parameters,
    source: Sequence,
    y: Sequence,
    cfg: DecodeConfig,
    constraint_positions: ConstraintPositions | None = None,
) -> Action:
    """The action one refinement iteration would take from y."""
    enc_out, _ = encode_source(params, source)
    action, _, _ = _greedy_step(params, enc_out, y, cfg, constraint_positions)
    return action


def decode(
    params: Parameters,
    source: Sequence,
    y0: Sequence,
    cfg: DecodeConfig,
    constraints: ConstraintSet | None = None,
) -> tuple[Sequence, DecodeTrace]:
    """Refine y0 until a fixed point or max_iters; count every edit made."""
    start = time.perf_counter()
    positions: ConstraintPositions | None = None
    if cfg.mode == "hard":
        if constraints is None:
            raise ValueError("hard mode needs the constraint phrases")
        if y0.ids != constraints.seed_sequence().ids:
            raise ValueError("hard mode expects y0 seeded from the constraints")
        positions = seed_positions(constraints)

    enc_out, _ = encode_source(params, source)
    y = y0
    iterations = repositions = deletions = insertions = 0
    for _ in range(cfg.max_iters):
        action, y_next, positions = _greedy_step(params, enc_out, y, cfg, positions)
        iterations += 1
        repositions += sum(1 for i, m in enumerate(action.reposition, 1) if m not in (0, i))
        deletions += sum(1 for m in action.reposition if m == 0)
        insertions += sum(action.placeholders)
        if y_next.ids == y.ids:
            break
        y = y_next
    wall_ms = (time.perf_counter() - start) * 1000.0
    return y_next, DecodeTrace(iterations, repositions, deletions, insertions, wall_ms)


def decode_batch(
    params: Parameters,
    sources: list[Sequence],
    constraint_sets: list[ConstraintSet | None] | None,
    cfg: DecodeConfig,
    threads: int = 1,
) -> tuple[list[Sequence], list[DecodeTrace]]:
    """Line-aligned decoding; sentences are independent, order is preserved."""
    if constraint_sets is None:
        constraint_sets = [None] * len(sources)
    if len(constraint_sets) != len(sources):
        raise ValueError(
            f"constraints not line-aligned: {len(constraint_sets)} lines "
            f"for {len(sources)} sources"
        )

    def one(pair):
        source, cs = pair
        if cs is None or not cs.phrases or cfg.mode == "unconstrained":
            seed, active = Sequence((BOS, EOS)), None
        else:
            seed, active = cs.seed_sequence(), cs
        local_cfg = cfg
        if active is None and cfg.mode == "hard":
            local_cfg = DecodeConfig(cfg.max_iters, cfg.gamma, "unconstrained")
        return decode(params, source, seed, local_cfg, active)

    items = list(zip(sources, constraint_sets))
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, items))
    else:
        results = [one(item) for item in items]
    return [seq for seq, _ in results], [trace for _, trace in results]
