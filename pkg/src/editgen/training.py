"""Dual-path imitation learning.

Each training pair is noised into a start state y0.  The reposition head is
supervised on a roll-in built from oracle placeholder insertion plus the
model's own token fills; the insertion heads are supervised on a roll-in
built from the model's own reposition choices.  Mixture factors alpha/beta
interpolate both roll-ins with plain y0.  All oracle targets come from the
constrained edit-distance oracle against the reference, so the loss is the
cross-entropy of the model's heads against one-hot oracle actions.
"""
from __future__ import annotations

import copy
import logging
from dataclasses import dataclass

import numpy as np

from .edits import apply_placeholders, apply_reposition, fill_tokens
from .model import (
    AdamState,
    HeadTargets,
    ModelConfig,
    Parameters,
    _loss_pass,
    _loss_pass_backward,
    _encoder_backward,
    adam_step,
    encode_source,
    init_adam_state,
    init_params,
    reposition_distribution,
    save_checkpoint,
    token_distribution,
    zero_grads,
)
from .oracle import OracleResult, align, insert_counts_by_source_gap, oracle_action
from .vocab import BOS, EOS, Sequence, TrainingPair, Vocabulary

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NoiseConfig:
    drop_prob: float = 0.5
    shuffle_k: float = 3.0
    # references are re-noised every time a pair is sampled; set False to
    # freeze one noise draw per pair for the whole run
    fresh_each_visit: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ValueError("drop_prob must be a probability")
        if self.shuffle_k < 0:
            raise ValueError("shuffle_k must be non-negative")


@dataclass(frozen=True)
class RollInConfig:
    alpha: float = 0.5
    beta: float = 0.5
    greedy: bool = False  # argmax instead of sampling for model-policy draws

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ValueError("mixture factors must lie in [0, 1]")


@dataclass(frozen=True)
class RollInSample:
    path: str  # "reposition" | "insertion"
    rollin_seq: Sequence
    targets: OracleResult


@dataclass(frozen=True)
class LossReport:
    rps_loss: float
    plh_loss: float
    tok_loss: float
    total: float
    rps_positions: int
    plh_positions: int
    tok_positions: int


@dataclass(frozen=True)
class TrainConfig:
    noise: NoiseConfig = NoiseConfig()
    rollin: RollInConfig = RollInConfig()
    lr: float = 3e-3
    batch_size: int = 64
    max_steps: int = 2000
    eval_interval: int = 200
    seed: int = 1

    def __post_init__(self) -> None:
        if self.batch_size < 1 or self.max_steps < 0 or self.eval_interval < 1:
            raise ValueError("bad loop sizes")
        if self.lr <= 0:
            raise ValueError("lr must be positive")


def noise_reference(y_star: Sequence, cfg: NoiseConfig, rng: np.random.Generator) -> Sequence:
    """Drop content tokens independently, then key-sort shuffle survivors.

    Keys are q_i = i + u_i with u_i ~ Uniform[0, shuffle_k] and a stable
    sort, so tokens whose original indices differ by >= shuffle_k can never
    swap relative order.
    """
    content = y_star.content
    keep = rng.random(len(content)) >= cfg.drop_prob
    survivors = [i for i, k in enumerate(keep) if k]
    offsets = rng.uniform(0.0, cfg.shuffle_k, size=len(survivors))
    keys = np.asarray(survivors, dtype=np.float64) + offsets
    order = np.argsort(keys, kind="stable")
    return Sequence.from_content(tuple(content[survivors[int(k)]] for k in order))


def _sample_rows(dist: np.ndarray, rng: np.random.Generator, greedy: bool) -> np.ndarray:
    if greedy:
        return dist.argmax(axis=1)
    u = rng.random((dist.shape[0], 1))
    idx = (dist.cumsum(axis=1) < u).sum(axis=1)
    return np.minimum(idx, dist.shape[1] - 1)


def make_rollin_reposition(
    params: Parameters,
    pair: TrainingPair,
    noise_cfg: NoiseConfig,
    rollin_cfg: RollInConfig,
    rng: np.random.Generator,
    y0: Sequence | None = None,
    enc_out: np.ndarray | None = None,
) -> RollInSample:
    """Roll-in for the reposition head: oracle placeholders + model fills.

    With probability beta the roll-in is y0 itself; otherwise the oracle's
    insertion counts are applied to y0's own gaps and the token head fills
    them (one model application only).
    """
    if y0 is None:
        y0 = noise_reference(pair.target, noise_cfg, rng)
    rollin = y0
    if rng.random() >= rollin_cfg.beta:
        counts = insert_counts_by_source_gap(align(y0, pair.target), len(y0))
        total = sum(counts)
        if total > 0 and len(y0) + total <= params.config.l_max:
            with_slots = apply_placeholders(y0, counts)
            if enc_out is None:
                enc_out, _ = encode_source(params, pair.source)
            tok_dist, _ = token_distribution(params, enc_out, with_slots)
            fills = _sample_rows(tok_dist, rng, rollin_cfg.greedy)
            rollin = fill_tokens(with_slots, tuple(int(t) for t in fills))
    return RollInSample("reposition", rollin, oracle_action(rollin, pair.target))


def make_rollin_insertion(
    params: Parameters,
    pair: TrainingPair,
    noise_cfg: NoiseConfig,
    rollin_cfg: RollInConfig,
    rng: np.random.Generator,
    y0: Sequence | None = None,
    enc_out: np.ndarray | None = None,
) -> RollInSample:
    """Roll-in for the insertion heads: one model reposition application."""
    if y0 is None:
        y0 = noise_reference(pair.target, noise_cfg, rng)
    rollin = y0
    if rng.random() >= rollin_cfg.alpha and len(y0) > 2:
        if enc_out is None:
            enc_out, _ = encode_source(params, pair.source)
        rps_dist = reposition_distribution(params, enc_out, y0)
        moves = _sample_rows(rps_dist, rng, rollin_cfg.greedy)
        rollin = apply_reposition(y0, tuple(int(r) for r in moves))
    return RollInSample("insertion", rollin, oracle_action(rollin, pair.target))


def _pair_rngs(batch: list[TrainingPair], rng: np.random.Generator) -> list[np.random.Generator]:
    """One child stream per distinct pair; every occurrence gets its own copy
    of the pristine child state, so duplicated pairs are processed identically
    and the mean-over-batch reduction is observable."""
    children: dict[tuple, np.random.Generator] = {}
    out = []
    for pair in batch:
        key = (pair.source.ids, pair.target.ids)
        if key not in children:
            children[key] = rng.spawn(1)[0]
        out.append(copy.deepcopy(children[key]))
    return out


def train_step(
    params: Parameters,
    batch: list[TrainingPair],
    cfg: TrainConfig,
    rng: np.random.Generator,
    opt_state: AdamState,
) -> tuple[Parameters, LossReport]:
    """One batch: build both roll-ins per pair, sum the three head losses,
    take one adaptive-moment step on the batch-mean gradient."""
    if not batch:
        raise ValueError("empty batch")
    grads = zero_grads(params)
    sums = {"rps": 0.0, "plh": 0.0, "tok": 0.0}
    counts = {"rps": 0, "plh": 0, "tok": 0}
    for pair, pair_rng in zip(batch, _pair_rngs(batch, rng)):
        y0 = noise_reference(pair.target, cfg.noise, pair_rng)
        enc_out, enc_cache = encode_source(params, pair.source)
        d_enc = np.zeros_like(enc_out)

        rps_sample = make_rollin_reposition(
            params, pair, cfg.noise, cfg.rollin, pair_rng, y0=y0, enc_out=enc_out
        )
        ins_sample = make_rollin_insertion(
            params, pair, cfg.noise, cfg.rollin, pair_rng, y0=y0, enc_out=enc_out
        )

        passes = [(rps_sample.rollin_seq,
                   HeadTargets(reposition=rps_sample.targets.reposition_targets))]
        oracle = ins_sample.targets
        survivors = apply_reposition(ins_sample.rollin_seq, oracle.action.reposition)
        passes.append((survivors, HeadTargets(placeholders=oracle.placeholder_targets)))
        if any(oracle.placeholder_targets):
            slotted = apply_placeholders(survivors, oracle.placeholder_targets)
            passes.append((slotted, HeadTargets(fills=oracle.token_targets)))

        for y, targets in passes:
            losses, cache = _loss_pass(params, enc_out, y, targets)
            d_enc += _loss_pass_backward(params, grads, enc_out, cache)
            for head in sums:
                sums[head] += losses[head]
            if targets.reposition is not None:
                counts["rps"] += max(len(y) - 2, 0)
            if targets.placeholders is not None:
                counts["plh"] += len(y) - 1
            if targets.fills is not None:
                counts["tok"] += len(targets.fills)
        _encoder_backward(params, grads, enc_cache, d_enc)

    scale = 1.0 / len(batch)
    for tensor in grads.values():
        tensor *= scale
    params, _ = adam_step(params, grads, opt_state, lr=cfg.lr)
    rps, plh, tok = (sums[h] * scale for h in ("rps", "plh", "tok"))
    return params, LossReport(
        rps_loss=rps, plh_loss=plh, tok_loss=tok, total=rps + plh + tok,
        rps_positions=counts["rps"], plh_positions=counts["plh"], tok_positions=counts["tok"],
    )


def exact_match_rate(hyps: list[Sequence], refs: list[Sequence]) -> float:
    if len(hyps) != len(refs):
        raise ValueError("line counts differ")
    hits = sum(1 for h, r in zip(hyps, refs) if h.ids == r.ids)
    return hits / len(hyps) if hyps else 0.0


def train(
    train_set: list[TrainingPair],
    valid_set: list[TrainingPair],
    model_cfg: ModelConfig,
    cfg: TrainConfig,
    checkpoint_path: str,
    src_vocab: Vocabulary | None = None,
    tgt_vocab: Vocabulary | None = None,
) -> tuple[Parameters, list[tuple[int, float, float, float]]]:
    """Training loop with periodic greedy validation decodes.

    Keeps the parameters with the best validation BLEU (computed over token
    ids, which is invariant to detokenization) and writes them to
    checkpoint_path.  Returns (best params, metrics rows); each row is
    (step, train_loss, valid_bleu, valid_exact).
    """
    from .decoding import DecodeConfig, decode  # local import to avoid a cycle
    from .metrics import bleu

    if not train_set or (not valid_set and cfg.max_steps >= cfg.eval_interval):
        raise ValueError("need non-empty train and valid sets")
    params = init_params(model_cfg)
    opt_state = init_adam_state(params)
    master = np.random.default_rng(cfg.seed)
    decode_cfg = DecodeConfig()
    best_bleu = float("-inf")
    best_params: Parameters | None = None
    rows: list[tuple[int, float, float, float]] = []
    window: list[float] = []
    for step in range(1, cfg.max_steps + 1):
        picks = master.integers(0, len(train_set), size=cfg.batch_size)
        batch = [train_set[int(i)] for i in picks]
        params, report = train_step(params, batch, cfg, master, opt_state)
        window.append(report.total)
        if step % cfg.eval_interval == 0:
            hyps = [decode(params, pair.source, Sequence((BOS, EOS)), decode_cfg)[0]
                    for pair in valid_set]
            refs = [pair.target for pair in valid_set]
            id_line = lambda s: " ".join(str(t) for t in s.content)
            valid_bleu = bleu([id_line(h) for h in hyps], [id_line(r) for r in refs])
            valid_exact = exact_match_rate(hyps, refs)
            train_loss = float(np.mean(window))
            window.clear()
            rows.append((step, train_loss, valid_bleu, valid_exact))
            logger.info("step %d\ttrain_loss %.4f\tvalid_bleu %.2f\tvalid_exact %.3f",
                        step, train_loss, valid_bleu, valid_exact)
            # ties go to the later snapshot: equal BLEU, more training
            if valid_bleu >= best_bleu:
                best_bleu = valid_bleu
                best_params = params.clone()
    if best_params is None:
        best_params = params
    save_checkpoint(best_params, model_cfg, checkpoint_path,
                    src_vocab=src_vocab, tgt_vocab=tgt_vocab)
    return best_params, rows


def metrics_log_lines(rows: list[tuple[int, float, float, float]]) -> list[str]:
    return [f"{step}\t{loss:.6f}\t{bleu_:.4f}\t{exact:.4f}"
            for step, loss, bleu_, exact in rows]
