"""Edit calculus: reposition, placeholder insertion, and token fill.

A full edit action is applied in that fixed order.  Reposition entries are
1-based source positions (0 deletes the slot); both boundary slots must
keep their own positions so boundaries never move or vanish.
"""
from __future__ import annotations

from dataclasses import dataclass

from .vocab import BOS, EOS, PLH, Sequence

K_MAX = 255


@dataclass(frozen=True)
class Action:
    """One refinement step: reposition, then placeholders, then fills."""

    reposition: tuple[int, ...]
    placeholders: tuple[int, ...]
    fills: tuple[int, ...]

    @property
    def is_identity(self) -> bool:
        n = len(self.reposition)
        return (
            self.reposition == tuple(range(1, n + 1))
            and not any(self.placeholders)
            and not self.fills
        )


def apply_reposition(seq: Sequence, reposition: tuple[int, ...]) -> Sequence:
    """Slot i takes the token at 1-based input position reposition[i]; 0 deletes.

    The same input position may feed several slots.  Boundary slots must map
    to themselves, which keeps BOS/EOS fixed and the output non-empty.
    """
    n = len(seq)
    if len(reposition) != n:
        raise ValueError(f"reposition length {len(reposition)} != sequence length {n}")
    if any(r < 0 or r > n for r in reposition):
        raise ValueError("reposition index out of range")
    if reposition[0] != 1 or reposition[-1] != n:
        raise ValueError("boundary slots must keep positions 1 and n")
    out = tuple(seq.ids[r - 1] for r in reposition if r != 0)
    interior = out[1:-1]
    if BOS in interior or EOS in interior:
        raise ValueError("reposition placed a boundary token in the interior")
    return Sequence(out)


def apply_placeholders(seq: Sequence, counts: tuple[int, ...]) -> Sequence:
    """Insert counts[i] placeholder tokens into the gap after position i+1."""
    n = len(seq)
    if len(counts) != n - 1:
        raise ValueError(f"need {n - 1} gap counts, got {len(counts)}")
    if any(c < 0 for c in counts):
        raise ValueError("negative placeholder count")
    if any(c > K_MAX for c in counts):
        raise ValueError(f"placeholder count exceeds K_max={K_MAX}")
    out: list[int] = [seq.ids[0]]
    for i, count in enumerate(counts):
        out.extend([PLH] * count)
        out.append(seq.ids[i + 1])
    return Sequence(tuple(out))


def fill_tokens(seq: Sequence, fills: tuple[int, ...]) -> Sequence:
    """Replace each placeholder, left to right, with the next fill token."""
    slots = sum(1 for t in seq.ids if t == PLH)
    if slots != len(fills):
        raise ValueError(f"sequence has {slots} placeholders, got {len(fills)} fills")
    if any(t in (BOS, EOS, PLH) for t in fills):
        raise ValueError("fill tokens may not be BOS, EOS, or PLH")
    fill_iter = iter(fills)
    out = tuple(next(fill_iter) if t == PLH else t for t in seq.ids)
    return Sequence(out)


def apply_action(seq: Sequence, action: Action) -> Sequence:
    repositioned = apply_reposition(seq, action.reposition)
    with_slots = apply_placeholders(repositioned, action.placeholders)
    return fill_tokens(with_slots, action.fills)
