"""Core vocabulary and sequence types shared by every other module.

Token ids 0..3 are reserved: begin-of-sequence, end-of-sequence, unknown,
and the placeholder slot used by the insertion machinery.  All sequences
carry explicit boundary tokens; operation contracts use 1-based positions.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import cached_property

import numpy as np

BOS = 0
EOS = 1
UNK = 2
PLH = 3

BOS_TOKEN = "<s>"
EOS_TOKEN = "</s>"
UNK_TOKEN = "<unk>"
PLH_TOKEN = "<plh>"

RESERVED_TOKENS = (BOS_TOKEN, EOS_TOKEN, UNK_TOKEN, PLH_TOKEN)


@dataclass(frozen=True)
class Sequence:
    """A token-id sequence with mandatory boundary tokens.

    ids[0] is BOS, ids[-1] is EOS, and neither appears anywhere else.
    PLH may appear in interior positions of intermediate states.
    """

    ids: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.ids) < 2:
            raise ValueError("sequence needs at least BOS and EOS")
        if self.ids[0] != BOS or self.ids[-1] != EOS:
            raise ValueError("sequence must start with BOS and end with EOS")
        interior = self.ids[1:-1]
        if BOS in interior or EOS in interior:
            raise ValueError("boundary token in interior position")
        if any(t < 0 for t in self.ids):
            raise ValueError("negative token id")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def content(self) -> tuple[int, ...]:
        return self.ids[1:-1]

    @staticmethod
    def from_content(ids: tuple[int, ...] | list[int]) -> Sequence:
        return Sequence((BOS, *ids, EOS))


@dataclass(frozen=True)
class Vocabulary:
    """Immutable token table; ids 0..3 are always the reserved tokens."""

    tokens: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.tokens[:4] != RESERVED_TOKENS:
            raise ValueError("tokens must start with the four reserved entries")
        if any((not t) or (" " in t) or ("\t" in t) for t in self.tokens):
            raise ValueError("tokens must be non-empty and whitespace-free")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("duplicate token")

    @cached_property
    def _index(self) -> dict[str, int]:
        return {tok: i for i, tok in enumerate(self.tokens)}

    @property
    def size(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        return self._index.get(token, UNK)

    def token_of(self, token_id: int) -> str:
        return self.tokens[token_id]

    def encode(self, line: str) -> Sequence:
        """Whitespace-tokenize a line; out-of-vocabulary tokens map to UNK."""
        return Sequence.from_content(tuple(self.id_of(t) for t in line.split()))

    def detokenize(self, seq: Sequence) -> str:
        return " ".join(self.tokens[t] for t in seq.content)


def build_vocabulary(lines: list[str], max_size: int = 32768) -> Vocabulary:
    """Reserved tokens first, then corpus tokens by descending frequency.

    Frequency ties break lexicographically; the table is truncated to
    max_size entries total.
    """
    if max_size < len(RESERVED_TOKENS):
        raise ValueError("max_size smaller than the reserved table")
    counts = Counter(tok for line in lines for tok in line.split())
    for tok in RESERVED_TOKENS:
        counts.pop(tok, None)
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    tokens = list(RESERVED_TOKENS) + [tok for tok, _ in ordered]
    return Vocabulary(tuple(tokens[:max_size]))


@dataclass(frozen=True)
class ConstraintSet:
    """Lexical constraints for one sentence: phrases of target-side ids.

    mode "soft" seeds the decoder start state; mode "hard" additionally
    masks edits so every constraint survives to the final output.
    """

    phrases: tuple[tuple[int, ...], ...]
    mode: str = "soft"

    def __post_init__(self) -> None:
        if self.mode not in ("soft", "hard"):
            raise ValueError(f"unknown constraint mode: {self.mode!r}")
        for phrase in self.phrases:
            if not phrase:
                raise ValueError("empty constraint phrase")
            if any(t in (BOS, EOS, PLH) for t in phrase):
                raise ValueError("reserved token in constraint phrase")

    @property
    def token_count(self) -> int:
        return sum(len(p) for p in self.phrases)

    def seed_sequence(self) -> Sequence:
        flat = tuple(t for phrase in self.phrases for t in phrase)
        return Sequence.from_content(flat)


@dataclass(frozen=True)
class TrainingPair:
    source: Sequence
    target: Sequence


def sample_constraints(
    pair: TrainingPair,
    k_min: int,
    k_max: int,
    rng: np.random.Generator,
    mode: str = "soft",
) -> ConstraintSet:
    """Pick 1 to k single-token constraints from the reference.

    k is uniform on {k_min..k_max}, capped by the number of eligible
    content positions (UNK positions are skipped).  Distinct positions are
    sampled without replacement; phrases keep reference order, so a soft
    seed never forces repositions the reference itself does not need.
    """
    if not (1 <= k_min <= k_max):
        raise ValueError("need 1 <= k_min <= k_max")
    target = pair.target
    eligible = [i for i, t in enumerate(target.content) if t != UNK]
    k = int(rng.integers(k_min, k_max + 1))
    k = min(k, len(eligible))
    if k == 0:
        return ConstraintSet((), mode)
    chosen = sorted(int(i) for i in rng.choice(len(eligible), size=k, replace=False))
    phrases = tuple((target.content[eligible[i]],) for i in chosen)
    return ConstraintSet(phrases, mode)


def read_lines(path: str) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh]


def parse_constraint_line(line: str) -> list[list[str]]:
    """Tab-separated phrases, space-separated tokens; empty line = none."""
    if not line.strip():
        return []
    return [phrase.split() for phrase in line.split("\t") if phrase.strip()]


def encode_constraints(
    vocab: Vocabulary, phrases: list[list[str]], mode: str
) -> ConstraintSet:
    return ConstraintSet(
        tuple(tuple(vocab.id_of(t) for t in phrase) for phrase in phrases), mode
    )
