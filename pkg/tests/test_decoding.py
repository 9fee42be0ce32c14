"""Greedy refinement loop, constraint masking, and position tracking."""
from __future__ import annotations

from collections import Counter

import numpy as np
import pytest

from editgen.decoding import (
    DecodeConfig,
    DecodeTrace,
    _remap_through_placeholders,
    _remap_through_reposition,
    _repair_reposition,
    decode,
    decode_batch,
    greedy_action,
    mask_hard_constraints,
    seed_positions,
)
from editgen.edits import apply_placeholders, apply_reposition
from editgen.model import ModelConfig, init_params
from editgen.vocab import BOS, EOS, ConstraintSet, Sequence

CFG = ModelConfig(
    src_vocab_size=16, tgt_vocab_size=16, d_model=8,
    n_layers_enc=1, n_layers_dec=1, l_max=24, seed=5,
)


def _zeroed(cfg=CFG):
    params = init_params(cfg)
    for t in params.tensors.values():
        t[:] = 0.0
    return params


def _identity_policy(cfg=CFG):
    # orthogonal target embeddings make every token most similar to itself,
    # so the reposition head keeps each slot; zero insertion weights argmax
    # to count 0; nothing else fires
    params = _zeroed(cfg)
    e = params.tensors["e_tgt"]
    for tok in range(4, cfg.tgt_vocab_size):
        e[tok, tok % cfg.d_model] = 5.0
    return params


def _delete_policy(cfg=CFG):
    # strong positive score on the delete outcome at every interior slot
    params = _zeroed(cfg)
    params.tensors["pos"][:] = 0.1
    params.tensors["del_vec"][:] = 50.0
    return params


def test_decode_config_validation():
    with pytest.raises(ValueError):
        DecodeConfig(max_iters=0)
    with pytest.raises(ValueError):
        DecodeConfig(gamma=-0.5)
    with pytest.raises(ValueError):
        DecodeConfig(mode="beam")
    with pytest.raises(ValueError):
        DecodeTrace(1, -1, 0, 0, 0.0)


def test_seed_positions_are_contiguous():
    cs = ConstraintSet(phrases=((5, 6), (7,)), mode="hard")
    assert seed_positions(cs) == [[2, 3], [4]]


def test_reposition_mask_removes_delete_mass():
    dist = np.full((4, 5), 0.2)
    out = mask_hard_constraints(dist, [[2], [3]], "reposition")
    assert out[1, 0] == 0.0 and out[2, 0] == 0.0
    assert np.allclose(out.sum(axis=1), 1.0)
    assert out[0, 0] > 0.0  # unconstrained rows keep their delete mass


def test_reposition_mask_handles_all_mass_on_delete():
    dist = np.zeros((4, 5))
    dist[:, 0] = 1.0
    out = mask_hard_constraints(dist, [[2]], "reposition")
    assert out[1, 2] == 1.0  # falls back to keeping its own position


def test_placeholder_mask_forces_zero_inside_phrases():
    dist = np.full((3, 4), 0.25)
    out = mask_hard_constraints(dist, [[2, 3]], "placeholder")
    assert out[1, 0] == 1.0 and out[1, 1:].sum() == 0.0
    assert np.allclose(out[0], 0.25) and np.allclose(out[2], 0.25)


def test_repair_pins_multi_token_phrases():
    moves = [1, 4, 4, 2, 5]
    assert _repair_reposition(moves, [[2, 3]]) == [1, 2, 3, 2, 5]


def test_repair_restores_orphaned_singles():
    # repairing position 2 overwrites the only reference to 4, which the
    # next pass then restores
    moves = [1, 4, 3, 3, 5]
    assert _repair_reposition(moves, [[2], [4]]) == [1, 2, 3, 4, 5]


def test_remap_through_reposition_follows_tokens():
    moves = [1, 3, 2, 4]  # swap the two content slots
    assert _remap_through_reposition(moves, [[2], [3]]) == [[3], [2]]


def test_remap_through_placeholders_shifts_by_prefix_sums():
    assert _remap_through_placeholders((2, 0, 1), [[2, 3]]) == [[4, 5]]


def test_identity_policy_reaches_fixed_point_immediately():
    params = _identity_policy()
    src = Sequence.from_content((5, 6, 7))
    y = Sequence.from_content((8, 9, 10, 11))
    out, trace = decode(params, src, y, DecodeConfig())
    assert out.ids == y.ids
    assert trace.iterations == 1
    assert trace.repositions == trace.deletions == trace.insertions == 0


def test_identity_policy_first_action_is_identity():
    params = _identity_policy()
    src = Sequence.from_content((5, 6))
    y = Sequence.from_content((8, 9, 10))
    action = greedy_action(params, src, y, DecodeConfig())
    assert action.is_identity


def test_gamma_turns_empty_ties_into_insertions():
    # uniform counts tie at 0; subtracting gamma from the empty option
    # promotes one placeholder per gap, filled with the smallest fillable
    # id (UNK is fillable, boundary and placeholder ids are not)
    params = _zeroed()
    src = Sequence.from_content((5,))
    out, trace = decode(params, src, Sequence((BOS, EOS)),
                        DecodeConfig(max_iters=1, gamma=0.5))
    assert out.ids == (BOS, 2, EOS)
    assert trace.insertions == 1
    out0, _ = decode(params, src, Sequence((BOS, EOS)), DecodeConfig(max_iters=1))
    assert out0.ids == (BOS, EOS)


def test_insertions_are_clamped_to_the_position_budget():
    params = _zeroed()
    params.tensors["pos"][:] = 0.1
    params.tensors["w_plh"][:, 200] = 50.0  # want 200 placeholders per gap
    src = Sequence.from_content((5,))
    out, _ = decode(params, src, Sequence((BOS, EOS)), DecodeConfig(max_iters=3))
    assert len(out) <= CFG.l_max


def test_hard_mode_survives_a_delete_everything_policy():
    params = _delete_policy()
    src = Sequence.from_content((5, 6))
    cs = ConstraintSet(phrases=((8, 9),), mode="hard")
    seed = cs.seed_sequence()

    plain, _ = decode(params, src, seed, DecodeConfig())
    assert plain.ids == (BOS, EOS)  # everything deleted without protection

    out, trace = decode(params, src, seed, DecodeConfig(mode="hard"), cs)
    assert out.ids == seed.ids
    assert trace.deletions == 0


def test_hard_mode_requires_matching_seed():
    params = _zeroed()
    src = Sequence.from_content((5,))
    cs = ConstraintSet(phrases=((8,),), mode="hard")
    with pytest.raises(ValueError):
        decode(params, src, Sequence((BOS, EOS)), DecodeConfig(mode="hard"), cs)
    with pytest.raises(ValueError):
        decode(params, src, cs.seed_sequence(), DecodeConfig(mode="hard"))


def test_hard_mode_preserves_constraints_under_random_policies():
    rng = np.random.default_rng(0)
    for seed in range(8):
        params = init_params(ModelConfig(
            src_vocab_size=16, tgt_vocab_size=16, d_model=8,
            n_layers_enc=1, n_layers_dec=1, l_max=24, seed=100 + seed,
        ))
        # random untrained policies still may not lose a constraint token
        n_phrases = int(rng.integers(1, 3))
        phrases = tuple(
            tuple(int(t) for t in rng.integers(4, 16, size=rng.integers(1, 3)))
            for _ in range(n_phrases)
        )
        cs = ConstraintSet(phrases=phrases, mode="hard")
        src = Sequence.from_content(tuple(int(t) for t in rng.integers(4, 16, size=4)))
        out, trace = decode(params, src, cs.seed_sequence(), DecodeConfig(mode="hard"), cs)
        have = Counter(out.content)
        want = Counter(t for p in phrases for t in p)
        assert all(have[t] >= c for t, c in want.items())
        assert trace.iterations <= 10 and len(out) <= 24


def test_decode_batch_alignment_and_order():
    params = _identity_policy()
    sources = [Sequence.from_content((5,)), Sequence.from_content((6, 7))]
    with pytest.raises(ValueError, match="line"):
        decode_batch(params, sources, [None], DecodeConfig())
    outs, traces = decode_batch(params, sources, None, DecodeConfig())
    assert len(outs) == len(traces) == 2
    assert all(o.ids == (BOS, EOS) for o in outs)  # nothing to grow from


def test_decode_batch_seeds_from_constraints():
    params = _identity_policy()
    sources = [Sequence.from_content((5,)), Sequence.from_content((6,))]
    sets = [ConstraintSet(phrases=((9,),), mode="soft"), ConstraintSet((), "soft")]
    outs, _ = decode_batch(params, sources, sets, DecodeConfig(mode="soft"))
    assert outs[0].ids == (BOS, 9, EOS)  # identity policy keeps the seed
    assert outs[1].ids == (BOS, EOS)    # empty constraint line, empty seed


def test_decode_batch_threads_match_serial():
    params = init_params(CFG)
    rng = np.random.default_rng(1)
    sources = [
        Sequence.from_content(tuple(int(t) for t in rng.integers(4, 16, size=n)))
        for n in (3, 5, 2, 4)
    ]
    serial, _ = decode_batch(params, sources, None, DecodeConfig())
    threaded, _ = decode_batch(params, sources, None, DecodeConfig(), threads=3)
    assert [s.ids for s in serial] == [t.ids for t in threaded]


def test_random_policy_decodes_terminate_and_stay_bounded():
    rng = np.random.default_rng(2)
    for seed in range(6):
        params = init_params(ModelConfig(
            src_vocab_size=16, tgt_vocab_size=16, d_model=8,
            n_layers_enc=1, n_layers_dec=1, l_max=24, seed=200 + seed,
        ))
        src = Sequence.from_content(tuple(int(t) for t in rng.integers(4, 16, size=5)))
        out, trace = decode(params, src, Sequence((BOS, EOS)), DecodeConfig())
        assert 1 <= trace.iterations <= 10
        assert len(out) <= 24
        assert trace.wall_ms >= 0.0
