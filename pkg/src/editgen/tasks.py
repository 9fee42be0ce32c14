"""Synthetic parallel tasks and plain-text corpus loading.

Three generators, each isolating one decoder head: copy (token fills),
swap_translate (movement between positions), duplicate (placeholder counts
above one). All are deterministic in the task seed.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .vocab import RESERVED_TOKENS, Sequence, TrainingPair, Vocabulary

logger = logging.getLogger(__name__)

TASK_KINDS = ("copy", "swap_translate", "duplicate")

# Generated corpora must fit the default position table, target side included.
_GEN_MAX_LEN = 254


@dataclass(frozen=True)
class TaskSpec:
    kind: str
    vocab_size: int = 20
    len_range: tuple[int, int] = (4, 10)
    n_pairs: int = 2000
    seed: int = 1

    def __post_init__(self) -> None:
        if self.kind not in TASK_KINDS:
            raise ValueError(f"unknown task kind: {self.kind!r}")
        if self.vocab_size < 2:
            raise ValueError("vocab_size must be at least 2")
        lo, hi = self.len_range
        if lo < 1 or hi < lo:
            raise ValueError(f"bad length range: {self.len_range}")
        longest = 2 * hi if self.kind == "duplicate" else hi
        if longest > _GEN_MAX_LEN:
            raise ValueError(f"max content length {hi} too long for task {self.kind!r}")
        if self.n_pairs < 1:
            raise ValueError("n_pairs must be positive")


def _word(prefix: str, i: int) -> str:
    return f"{prefix}{i:03d}"


def task_vocabularies(spec: TaskSpec) -> tuple[Vocabulary, Vocabulary]:
    """Fixed vocabularies for a task kind; swap_translate sides are disjoint."""
    if spec.kind == "swap_translate":
        src = Vocabulary(RESERVED_TOKENS + tuple(_word("s", i) for i in range(spec.vocab_size)))
        tgt = Vocabulary(RESERVED_TOKENS + tuple(_word("t", i) for i in range(spec.vocab_size)))
        return src, tgt
    shared = Vocabulary(RESERVED_TOKENS + tuple(_word("w", i) for i in range(spec.vocab_size)))
    return shared, shared


def _target_words(spec: TaskSpec, words: list[int]) -> list[int]:
    if spec.kind == "copy":
        return list(words)
    if spec.kind == "duplicate":
        return [w for w in words for _ in (0, 1)]
    # swap_translate: map through the index bijection, then swap adjacent
    # pairs; an odd trailing word stays in place.
    mapped = list(words)
    out = list(mapped)
    for i in range(0, len(mapped) - 1, 2):
        out[i], out[i + 1] = mapped[i + 1], mapped[i]
    return out


def generate(spec: TaskSpec) -> tuple[list[TrainingPair], Vocabulary, Vocabulary]:
    """Draw n_pairs independent pairs; indices uniform over the content vocab."""
    src_vocab, tgt_vocab = task_vocabularies(spec)
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.len_range
    n_reserved = len(RESERVED_TOKENS)
    pairs = []
    for _ in range(spec.n_pairs):
        length = int(rng.integers(lo, hi + 1))
        words = [int(w) for w in rng.integers(0, spec.vocab_size, size=length)]
        src_ids = tuple(n_reserved + w for w in words)
        tgt_ids = tuple(n_reserved + w for w in _target_words(spec, words))
        pairs.append(
            TrainingPair(Sequence.from_content(src_ids), Sequence.from_content(tgt_ids))
        )
    return pairs, src_vocab, tgt_vocab


def load_parallel_corpus(
    src_path: str | Path,
    tgt_path: str | Path,
    src_vocab: Vocabulary,
    tgt_vocab: Vocabulary,
    l_max: int = 256,
) -> list[TrainingPair]:
    """Encode line-aligned text files, dropping pairs that exceed l_max."""
    src_lines = Path(src_path).read_text(encoding="utf-8").splitlines()
    tgt_lines = Path(tgt_path).read_text(encoding="utf-8").splitlines()
    if len(src_lines) != len(tgt_lines):
        raise ValueError(
            f"line counts differ: {len(src_lines)} in {src_path} "
            f"vs {len(tgt_lines)} in {tgt_path}"
        )
    pairs = []
    dropped = 0
    for src_line, tgt_line in zip(src_lines, tgt_lines):
        source = src_vocab.encode(src_line)
        target = tgt_vocab.encode(tgt_line)
        if len(source) > l_max or len(target) > l_max:
            dropped += 1
            continue
        pairs.append(TrainingPair(source, target))
    if dropped:
        logger.info("dropped %d pairs longer than %d positions", dropped, l_max)
    return pairs


def write_vocab_file(vocab: Vocabulary, path: str | Path) -> None:
    Path(path).write_text("\n".join(vocab.tokens) + "\n", encoding="utf-8")


def read_vocab_file(path: str | Path) -> Vocabulary:
    tokens = Path(path).read_text(encoding="utf-8").splitlines()
    return Vocabulary(tuple(tokens))


def write_task_files(
    spec: TaskSpec,
    out_dir: str | Path,
    n_train: int = 2000,
    n_valid: int = 200,
    n_test: int = 200,
) -> dict[str, Path]:
    """Generate one stream of pairs and split it into train/valid/test files.

    Writes `<split>.src` / `<split>.tgt` detokenized text plus
    `vocab.src` / `vocab.tgt` (one token per line, reserved rows first).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    total = n_train + n_valid + n_test
    full_spec = TaskSpec(spec.kind, spec.vocab_size, spec.len_range, total, spec.seed)
    pairs, src_vocab, tgt_vocab = generate(full_spec)
    splits = {
        "train": pairs[:n_train],
        "valid": pairs[n_train : n_train + n_valid],
        "test": pairs[n_train + n_valid :],
    }
    written: dict[str, Path] = {}
    for name, split_pairs in splits.items():
        if not split_pairs:
            continue
        src_file = out / f"{name}.src"
        tgt_file = out / f"{name}.tgt"
        src_file.write_text(
            "\n".join(src_vocab.detokenize(p.source) for p in split_pairs) + "\n",
            encoding="utf-8",
        )
        tgt_file.write_text(
            "\n".join(tgt_vocab.detokenize(p.target) for p in split_pairs) + "\n",
            encoding="utf-8",
        )
        written[f"{name}.src"] = src_file
        written[f"{name}.tgt"] = tgt_file
    write_vocab_file(src_vocab, out / "vocab.src")
    write_vocab_file(tgt_vocab, out / "vocab.tgt")
    written["vocab.src"] = out / "vocab.src"
    written["vocab.tgt"] = out / "vocab.tgt"
    return written
