"""Encoder-decoder policy with three edit heads and analytic gradients.

Everything is float64 numpy, one sequence at a time, no framework.  The
architecture is fixed: token + learned position embeddings, blocks of
single-head scaled dot-product attention with a residual add followed by a
two-layer position-wise feed-forward (smooth GELU nonlinearity) with a
residual add (no layer norm, no dropout), and a decoder that adds
cross-attention to encoder outputs.

Heads over decoder states h_1..h_n:
  reposition:   softmax(h_i . [b, e_1, ..., e_n])   e_j = E_tgt row of y_j
  placeholder:  softmax([h_i ; h_{i+1}] . W_plh)    counts 0..K_MAX per gap
  token fill:   softmax(h_i . W_tok)                at placeholder positions

Masking rules (all via -inf logits, so masked entries carry zero gradient):
boundary reposition slots are forced to keep their own position; interior
slots may never select the boundary positions (sampled or greedy actions
therefore always produce valid sequences); the token head never selects
BOS, EOS, or PLH, mirroring what the edit calculus accepts as fills.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .edits import K_MAX
from .vocab import BOS, EOS, PLH, Sequence, Vocabulary

NEG_INF = float("-inf")


@dataclass(frozen=True)
class ModelConfig:
    src_vocab_size: int
    tgt_vocab_size: int
    d_model: int = 64
    n_layers_enc: int = 2
    n_layers_dec: int = 2
    l_max: int = 256
    k_max: int = K_MAX
    seed: int = 1
    ff_mult: int = 4

    def __post_init__(self) -> None:
        if self.d_model < 8:
            raise ValueError("d_model must be at least 8")
        if self.ff_mult < 1:
            raise ValueError("ff_mult must be at least 1")
        if self.k_max != K_MAX:
            raise ValueError(f"k_max is pinned to {K_MAX}")
        if self.n_layers_enc < 1 or self.n_layers_dec < 1:
            raise ValueError("need at least one layer per stack")
        if self.src_vocab_size < 4 or self.tgt_vocab_size < 4:
            raise ValueError("vocab must include the reserved tokens")
        if self.l_max < 2:
            raise ValueError("l_max too small")

    @property
    def d_ff(self) -> int:
        return self.ff_mult * self.d_model


@dataclass
class Parameters:
    config: ModelConfig
    tensors: dict[str, np.ndarray]

    def clone(self) -> Parameters:
        return Parameters(self.config, {k: v.copy() for k, v in self.tensors.items()})


def _param_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    d, f = cfg.d_model, cfg.d_ff
    shapes: dict[str, tuple[int, ...]] = {
        "e_src": (cfg.src_vocab_size, d),
        "e_tgt": (cfg.tgt_vocab_size, d),
        "pos": (cfg.l_max, d),
    }
    def block(prefix: str, cross: bool) -> None:
        for part in (("self", "cross") if cross else ("self",)):
            for w in ("wq", "wk", "wv", "wo"):
                shapes[f"{prefix}.{part}.{w}"] = (d, d)
        shapes[f"{prefix}.ff.w1"] = (d, f)
        shapes[f"{prefix}.ff.b1"] = (f,)
        shapes[f"{prefix}.ff.w2"] = (f, d)
        shapes[f"{prefix}.ff.b2"] = (d,)
    for i in range(cfg.n_layers_enc):
        block(f"enc{i}", cross=False)
    for i in range(cfg.n_layers_dec):
        block(f"dec{i}", cross=True)
    shapes["del_vec"] = (d,)
    shapes["w_plh"] = (2 * d, cfg.k_max + 1)
    shapes["w_tok"] = (d, cfg.tgt_vocab_size)
    return shapes


def init_params(cfg: ModelConfig) -> Parameters:
    """Seeded init: matrices Uniform(-s, s) with s = sqrt(6/(fan_in+fan_out));
    every vector (deletion vector, feed-forward biases) starts at zero."""
    rng = np.random.default_rng(cfg.seed)
    tensors: dict[str, np.ndarray] = {}
    for name, shape in _param_shapes(cfg).items():
        if len(shape) == 1:
            tensors[name] = np.zeros(shape, dtype=np.float64)
        else:
            s = math.sqrt(6.0 / (shape[0] + shape[1]))
            tensors[name] = rng.uniform(-s, s, size=shape).astype(np.float64)
    return Parameters(cfg, tensors)


def parameter_count(params: Parameters) -> int:
    return sum(t.size for t in params.tensors.values())


def zero_grads(params: Parameters) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in params.tensors.items()}


# ---------------------------------------------------------------------------
# forward pieces, each returning the cache its backward twin needs


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    out = np.exp(shifted)
    out /= out.sum(axis=1, keepdims=True)
    return out


def _attn_forward(t: dict, p: str, x: np.ndarray, ctx: np.ndarray):
    scale = 1.0 / math.sqrt(x.shape[1])
    q = x @ t[p + ".wq"]
    k = ctx @ t[p + ".wk"]
    v = ctx @ t[p + ".wv"]
    a = _softmax_rows((q @ k.T) * scale)
    o = a @ v
    return o @ t[p + ".wo"], (q, k, v, a, o, scale)


def _attn_backward(t, g, p, dout, x, ctx, cache, same: bool):
    """Returns (dx, dctx); when same is True the caller passes ctx is x and
    only dx is meaningful (dctx folded in)."""
    q, k, v, a, o, scale = cache
    g[p + ".wo"] += o.T @ dout
    do = dout @ t[p + ".wo"].T
    da = do @ v.T
    dv = a.T @ do
    ds = a * (da - (da * a).sum(axis=1, keepdims=True))
    dq = (ds @ k) * scale
    dk = (ds.T @ q) * scale
    g[p + ".wq"] += x.T @ dq
    g[p + ".wk"] += ctx.T @ dk
    g[p + ".wv"] += ctx.T @ dv
    dx = dq @ t[p + ".wq"].T
    dctx = dk @ t[p + ".wk"].T + dv @ t[p + ".wv"].T
    if same:
        return dx + dctx, None
    return dx, dctx


_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_A = 0.044715


def _gelu(pre: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    inner = np.tanh(_GELU_C * (pre + _GELU_A * pre**3))
    return 0.5 * pre * (1.0 + inner), inner


def _gelu_grad(pre: np.ndarray, inner: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + inner) + 0.5 * pre * (1.0 - inner**2) * _GELU_C * (
        1.0 + 3.0 * _GELU_A * pre**2)


def _ff_forward(t: dict, p: str, x: np.ndarray):
    # smooth activation keeps central finite differences valid everywhere
    pre = x @ t[p + ".w1"] + t[p + ".b1"]
    h, inner = _gelu(pre)
    return h @ t[p + ".w2"] + t[p + ".b2"], (h, pre, inner)


def _ff_backward(t, g, p, dout, x, cache):
    h, pre, inner = cache
    g[p + ".w2"] += h.T @ dout
    g[p + ".b2"] += dout.sum(axis=0)
    dh = (dout @ t[p + ".w2"].T) * _gelu_grad(pre, inner)
    g[p + ".w1"] += x.T @ dh
    g[p + ".b1"] += dh.sum(axis=0)
    return dh @ t[p + ".w1"].T


def _embed(params: Parameters, table: str, ids: tuple[int, ...]) -> np.ndarray:
    cfg = params.config
    if len(ids) > cfg.l_max:
        raise ValueError(f"sequence length {len(ids)} exceeds L_max={cfg.l_max}")
    idx = np.asarray(ids)
    return params.tensors[table][idx] + params.tensors["pos"][: len(ids)]


def encode_source(params: Parameters, source: Sequence):
    """Run the encoder once; the cache can back several decoder passes."""
    t = params.tensors
    x = _embed(params, "e_src", source.ids)
    layers = []
    for i in range(params.config.n_layers_enc):
        p = f"enc{i}"
        attn_out, ac = _attn_forward(t, p + ".self", x, x)
        x1 = x + attn_out
        ff_out, fc = _ff_forward(t, p + ".ff", x1)
        layers.append((x, ac, x1, fc))
        x = x1 + ff_out
    return x, (source.ids, layers)


def _encoder_backward(params, g, cache, d_out):
    src_ids, layers = cache
    t = params.tensors
    dx = d_out
    for i in reversed(range(params.config.n_layers_enc)):
        p = f"enc{i}"
        x, ac, x1, fc = layers[i]
        dx1 = dx + _ff_backward(t, g, p + ".ff", dx, x1, fc)
        dattn, _ = _attn_backward(t, g, p + ".self", dx1, x, x, ac, same=True)
        dx = dx1 + dattn
    np.add.at(g["e_src"], np.asarray(src_ids), dx)
    g["pos"][: len(src_ids)] += dx


def _decoder_forward(params: Parameters, enc_out: np.ndarray, y: Sequence):
    t = params.tensors
    x = _embed(params, "e_tgt", y.ids)
    layers = []
    for i in range(params.config.n_layers_dec):
        p = f"dec{i}"
        self_out, sc = _attn_forward(t, p + ".self", x, x)
        x1 = x + self_out
        cross_out, cc = _attn_forward(t, p + ".cross", x1, enc_out)
        x2 = x1 + cross_out
        ff_out, fc = _ff_forward(t, p + ".ff", x2)
        layers.append((x, sc, x1, cc, x2, fc))
        x = x2 + ff_out
    return x, (y.ids, layers)


def _decoder_backward(params, g, cache, enc_out, d_h):
    """Returns the gradient w.r.t. enc_out (caller accumulates across passes)."""
    y_ids, layers = cache
    t = params.tensors
    d_enc = np.zeros_like(enc_out)
    dx = d_h
    for i in reversed(range(params.config.n_layers_dec)):
        p = f"dec{i}"
        x, sc, x1, cc, x2, fc = layers[i]
        dx2 = dx + _ff_backward(t, g, p + ".ff", dx, x2, fc)
        dq_path, dctx = _attn_backward(t, g, p + ".cross", dx2, x1, enc_out, cc, same=False)
        d_enc += dctx
        dx1 = dx2 + dq_path
        dattn, _ = _attn_backward(t, g, p + ".self", dx1, x, x, sc, same=True)
        dx = dx1 + dattn
    np.add.at(g["e_tgt"], np.asarray(y_ids), dx)
    g["pos"][: len(y_ids)] += dx
    return d_enc


def _rps_mask(n: int) -> np.ndarray:
    """Additive mask over (n, n+1) reposition logits: boundary slots keep
    their own position, interior slots may not grab a boundary position."""
    mask = np.zeros((n, n + 1))
    mask[0, :] = NEG_INF
    mask[0, 1] = 0.0
    mask[-1, :] = NEG_INF
    mask[-1, n] = 0.0
    if n > 2:
        mask[1:-1, 1] = NEG_INF
        mask[1:-1, n] = NEG_INF
    return mask


def _head_rps(params, h, y_ids):
    e_y = params.tensors["e_tgt"][np.asarray(y_ids)]
    n = len(y_ids)
    logits = np.empty((n, n + 1))
    logits[:, 0] = h @ params.tensors["del_vec"]
    logits[:, 1:] = h @ e_y.T
    logits += _rps_mask(n)
    return _softmax_rows(logits), e_y


def _head_plh(params, h):
    gap_states = np.concatenate([h[:-1], h[1:]], axis=1)
    return _softmax_rows(gap_states @ params.tensors["w_plh"]), gap_states


def _head_tok(params, h, plh_idx: np.ndarray):
    logits = h[plh_idx] @ params.tensors["w_tok"]
    logits[:, [BOS, EOS, PLH]] = NEG_INF
    return _softmax_rows(logits)


@dataclass(frozen=True)
class PolicyOutput:
    h: np.ndarray
    rps_dist: np.ndarray           # (n, n+1): [delete, position 1..n]
    plh_dist: np.ndarray           # (n-1, K_MAX+1)
    tok_dist: np.ndarray           # (#PLH, |V_tgt|)
    plh_positions: tuple[int, ...]  # 0-based positions of PLH in y


def forward_policy(params: Parameters, source: Sequence, y: Sequence) -> PolicyOutput:
    enc_out, _ = encode_source(params, source)
    return forward_policy_given_enc(params, enc_out, y)


def forward_policy_given_enc(params: Parameters, enc_out: np.ndarray, y: Sequence) -> PolicyOutput:
    h, _ = _decoder_forward(params, enc_out, y)
    rps_dist, _ = _head_rps(params, h, y.ids)
    plh_dist, _ = _head_plh(params, h)
    plh_idx = np.flatnonzero(np.asarray(y.ids) == PLH)
    tok_dist = _head_tok(params, h, plh_idx)
    return PolicyOutput(h, rps_dist, plh_dist, tok_dist, tuple(int(i) for i in plh_idx))


def reposition_distribution(params: Parameters, enc_out: np.ndarray, y: Sequence) -> np.ndarray:
    """Just the reposition head; used when the other heads are not needed."""
    h, _ = _decoder_forward(params, enc_out, y)
    dist, _ = _head_rps(params, h, y.ids)
    return dist


def token_distribution(params: Parameters, enc_out: np.ndarray, y: Sequence):
    """Token-fill head at y's placeholder positions: (dist, positions)."""
    h, _ = _decoder_forward(params, enc_out, y)
    plh_idx = np.flatnonzero(np.asarray(y.ids) == PLH)
    return _head_tok(params, h, plh_idx), plh_idx


def placeholder_distribution(params: Parameters, enc_out: np.ndarray, y: Sequence) -> np.ndarray:
    """Just the insertion-count head, one row per adjacent gap in y."""
    h, _ = _decoder_forward(params, enc_out, y)
    dist, _ = _head_plh(params, h)
    return dist


# ---------------------------------------------------------------------------
# supervised loss and reverse-mode gradients


@dataclass(frozen=True)
class HeadTargets:
    """Targets for whichever heads this pass supervises.

    reposition: length n, values 0..n (boundary slots ignored); placeholders:
    length n-1, values 0..K_MAX; fills: one token id per PLH position of y.
    """

    reposition: tuple[int, ...] | None = None
    placeholders: tuple[int, ...] | None = None
    fills: tuple[int, ...] | None = None

    @property
    def count(self) -> int:
        total = 0
        if self.reposition is not None:
            total += max(len(self.reposition) - 2, 0)
        if self.placeholders is not None:
            total += len(self.placeholders)
        if self.fills is not None:
            total += len(self.fills)
        return total


def _validate_targets(cfg: ModelConfig, y: Sequence, targets: HeadTargets, n_plh: int) -> None:
    n = len(y)
    if targets.reposition is not None:
        if len(targets.reposition) != n:
            raise ValueError("reposition targets must cover every slot")
        if any(r < 0 or r > n for r in targets.reposition):
            raise ValueError("reposition target index out of range")
    if targets.placeholders is not None:
        if len(targets.placeholders) != n - 1:
            raise ValueError("placeholder targets must cover every gap")
        if any(c < 0 or c > cfg.k_max for c in targets.placeholders):
            raise ValueError("placeholder target count out of range")
    if targets.fills is not None:
        if len(targets.fills) != n_plh:
            raise ValueError("fill targets must cover every placeholder")
        if any(t < 0 or t >= cfg.tgt_vocab_size for t in targets.fills):
            raise ValueError("fill target id out of range")


def _loss_pass(params: Parameters, enc_out: np.ndarray, y: Sequence, targets: HeadTargets):
    """Forward through the decoder and the supervised heads.

    Returns (per-head losses, cache for _loss_pass_backward).
    """
    h, dec_cache = _decoder_forward(params, enc_out, y)
    y_ids = y.ids
    n = len(y_ids)
    plh_idx = np.flatnonzero(np.asarray(y_ids) == PLH)
    _validate_targets(params.config, y, targets, len(plh_idx))

    losses = {"rps": 0.0, "plh": 0.0, "tok": 0.0}
    rps = plh = tok = None
    e_y = gap_states = None
    if targets.reposition is not None and n > 2:
        rps, e_y = _head_rps(params, h, y_ids)
        rows = np.arange(1, n - 1)
        cols = np.asarray(targets.reposition[1:-1])
        losses["rps"] = float(-np.log(rps[rows, cols]).sum())
    if targets.placeholders is not None:
        plh, gap_states = _head_plh(params, h)
        rows = np.arange(n - 1)
        cols = np.asarray(targets.placeholders)
        losses["plh"] = float(-np.log(plh[rows, cols]).sum())
    if targets.fills is not None and len(plh_idx):
        tok = _head_tok(params, h, plh_idx)
        cols = np.asarray(targets.fills)
        losses["tok"] = float(-np.log(tok[np.arange(len(plh_idx)), cols]).sum())

    cache = (h, dec_cache, y_ids, plh_idx, targets, rps, e_y, plh, gap_states, tok)
    return losses, cache


def _loss_pass_backward(params: Parameters, g: dict, enc_out: np.ndarray, cache):
    """Backprop one supervised pass; returns d(enc_out)."""
    h, dec_cache, y_ids, plh_idx, targets, rps, e_y, plh, gap_states, tok = cache
    n = len(y_ids)
    d = params.config.d_model
    d_h = np.zeros_like(h)

    if tok is not None:
        dl = tok.copy()
        dl[np.arange(len(plh_idx)), np.asarray(targets.fills)] -= 1.0
        g["w_tok"] += h[plh_idx].T @ dl
        d_h[plh_idx] += dl @ params.tensors["w_tok"].T
    if plh is not None:
        dl = plh.copy()
        dl[np.arange(n - 1), np.asarray(targets.placeholders)] -= 1.0
        g["w_plh"] += gap_states.T @ dl
        dg = dl @ params.tensors["w_plh"].T
        d_h[:-1] += dg[:, :d]
        d_h[1:] += dg[:, d:]
    if rps is not None:
        dl = rps.copy()
        rows = np.arange(1, n - 1)
        dl[rows, np.asarray(targets.reposition[1:-1])] -= 1.0
        dl[0, :] = 0.0
        dl[-1, :] = 0.0
        g["del_vec"] += h.T @ dl[:, 0]
        d_h += np.outer(dl[:, 0], params.tensors["del_vec"])
        d_h += dl[:, 1:] @ e_y
        np.add.at(g["e_tgt"], np.asarray(y_ids), dl[:, 1:].T @ h)

    return _decoder_backward(params, g, dec_cache, enc_out, d_h)


def loss_and_gradients(
    params: Parameters, source: Sequence, y: Sequence, targets: HeadTargets
) -> tuple[float, dict[str, np.ndarray]]:
    """Summed negative log-likelihood of the supervised positions + exact grads."""
    enc_out, enc_cache = encode_source(params, source)
    losses, cache = _loss_pass(params, enc_out, y, targets)
    g = zero_grads(params)
    d_enc = _loss_pass_backward(params, g, enc_out, cache)
    _encoder_backward(params, g, enc_cache, d_enc)
    return sum(losses.values()), g


def loss_only(params: Parameters, source: Sequence, y: Sequence, targets: HeadTargets) -> float:
    enc_out, _ = encode_source(params, source)
    losses, _ = _loss_pass(params, enc_out, y, targets)
    return sum(losses.values())


# ---------------------------------------------------------------------------
# finite differences


@dataclass(frozen=True)
class FiniteDiffEntry:
    tensor: str
    index: int
    analytic: float
    numeric: float
    rel_err: float


@dataclass(frozen=True)
class FiniteDiffReport:
    max_rel_err: float
    checked: int
    failures: tuple[FiniteDiffEntry, ...]
    step: float
    tol: float

    @property
    def ok(self) -> bool:
        return not self.failures


def finite_diff_check(
    params: Parameters,
    source: Sequence,
    y: Sequence,
    targets: HeadTargets,
    step: float = 1e-5,
    tol: float = 1e-4,
    analytic_grads: dict[str, np.ndarray] | None = None,
) -> FiniteDiffReport:
    """Central differences over every parameter element.

    Relative error is |a - n| / max(|a|, |n|, 1e-3); the floor keeps the
    comparison meaningful for zero-gradient elements, where both sides sit
    at finite-difference noise level (~1e-9 for losses of order 10).
    analytic_grads substitutes the gradients under test; it exists so a
    deliberately corrupted gradient can prove the check would catch one.
    """
    if parameter_count(params) > 50_000:
        raise ValueError("finite_diff_check is for small configs (<= 50k parameters)")
    if analytic_grads is None:
        _, grads = loss_and_gradients(params, source, y, targets)
    else:
        grads = analytic_grads
    max_rel = 0.0
    checked = 0
    failures: list[FiniteDiffEntry] = []
    for name, tensor in params.tensors.items():
        flat = tensor.ravel()
        gflat = grads[name].ravel()
        for idx in range(flat.size):
            orig = flat[idx].item()
            flat[idx] = orig + step
            lp = loss_only(params, source, y, targets)
            flat[idx] = orig - step
            lm = loss_only(params, source, y, targets)
            flat[idx] = orig
            numeric = (lp - lm) / (2.0 * step)
            analytic = gflat[idx].item()
            rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-3)
            checked += 1
            if rel > max_rel:
                max_rel = rel
            if rel > tol:
                failures.append(FiniteDiffEntry(name, idx, analytic, numeric, rel))
    return FiniteDiffReport(max_rel, checked, tuple(failures), step, tol)


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0


def init_adam_state(params: Parameters) -> AdamState:
    return AdamState(
        m={k: np.zeros_like(x) for k, x in params.tensors.items()},
        v={k: np.zeros_like(x) for k, x in params.tensors.items()},
    )


def adam_step(
    params: Parameters,
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[Parameters, AdamState]:
    state.t += 1
    bc1 = 1.0 - beta1 ** state.t
    bc2 = 1.0 - beta2 ** state.t
    for name, tensor in params.tensors.items():
        grad = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * np.square(grad)
        tensor -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return params, state


# ---------------------------------------------------------------------------
# checkpoint io: versioned text format, lossless round trip

CKPT_HEADER = "EDITOR-CKPT v1"

_CONFIG_KEYS = ("d_model", "n_layers_enc", "n_layers_dec", "l_max", "k_max", "seed",
                "ff_mult")


def save_checkpoint(
    params: Parameters,
    cfg: ModelConfig,
    path: str,
    src_vocab: Vocabulary | None = None,
    tgt_vocab: Vocabulary | None = None,
) -> None:
    if cfg != params.config:
        raise ValueError("cfg does not match the parameters' config")
    lines = [CKPT_HEADER]
    lines.append(f"src_vocab_size = {cfg.src_vocab_size}")
    lines.append(f"tgt_vocab_size = {cfg.tgt_vocab_size}")
    for key in _CONFIG_KEYS:
        lines.append(f"{key} = {getattr(cfg, key)}")
    if src_vocab is not None:
        lines.append("src_vocab = " + " ".join(src_vocab.tokens))
    if tgt_vocab is not None:
        lines.append("tgt_vocab = " + " ".join(tgt_vocab.tokens))
    for name, tensor in params.tensors.items():
        lines.append(name)
        lines.append(" ".join(str(s) for s in tensor.shape))
        mat = tensor if tensor.ndim == 2 else tensor.reshape(1, -1)
        for row in mat:
            lines.append(" ".join(repr(x) for x in row.tolist()))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path: str, expect: ModelConfig | None = None) -> tuple[Parameters, ModelConfig]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CKPT_HEADER:
        raise ValueError(f"{path}: not a checkpoint (bad header)")
    config_kv: dict[str, str] = {}
    i = 1
    while i < len(lines) and "=" in lines[i]:
        key, _, value = lines[i].partition("=")
        config_kv[key.strip()] = value.strip()
        i += 1
    try:
        cfg = ModelConfig(
            src_vocab_size=int(config_kv["src_vocab_size"]),
            tgt_vocab_size=int(config_kv["tgt_vocab_size"]),
            **{key: int(config_kv[key]) for key in _CONFIG_KEYS},
        )
    except KeyError as missing:
        raise ValueError(f"{path}: config key {missing} missing") from None
    check_against = expect if expect is not None else cfg
    expected_shapes = _param_shapes(check_against)

    tensors: dict[str, np.ndarray] = {}
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        name = lines[i].strip()
        if name not in expected_shapes:
            raise ValueError(f"{path}: unexpected tensor block {name!r}")
        if i + 1 >= len(lines):
            raise ValueError(f"{path}: truncated in block {name!r}")
        shape = tuple(int(s) for s in lines[i + 1].split())
        if shape != expected_shapes[name]:
            raise ValueError(
                f"{path}: shape mismatch in block {name!r}: "
                f"expected {expected_shapes[name]}, found {shape}"
            )
        count = int(np.prod(shape))
        values: list[float] = []
        i += 2
        while len(values) < count:
            if i >= len(lines):
                raise ValueError(f"{path}: truncated in block {name!r}")
            values.extend(float(tok) for tok in lines[i].split())
            i += 1
        if len(values) != count:
            raise ValueError(f"{path}: wrong element count in block {name!r}")
        tensors[name] = np.asarray(values, dtype=np.float64).reshape(shape)
    missing_blocks = set(expected_shapes) - set(tensors)
    if missing_blocks:
        raise ValueError(f"{path}: missing tensor blocks {sorted(missing_blocks)}")
    return Parameters(check_against, tensors), check_against


def read_checkpoint_vocabs(path: str) -> tuple[Vocabulary, Vocabulary]:
    """Recover the vocabularies a training run embedded in its checkpoint."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    found: dict[str, Vocabulary] = {}
    for line in lines[1:]:
        if "=" not in line:
            break
        key, _, value = line.partition("=")
        if key.strip() in ("src_vocab", "tgt_vocab"):
            found[key.strip()] = Vocabulary(tuple(value.split()))
    if "src_vocab" not in found or "tgt_vocab" not in found:
        raise ValueError(f"{path}: checkpoint carries no vocabulary lines")
    return found["src_vocab"], found["tgt_vocab"]
