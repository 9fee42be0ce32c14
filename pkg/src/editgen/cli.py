"""Command-line surface: train, decode, evaluate, and self-checks.

Reports go to standard output as tab-separated `key value` lines; logs go
to standard error.  Exit codes: 0 success, 1 a verification check failed,
2 usage or I/O errors.
"""
from __future__ import annotations

import argparse
import itertools
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .decoding import DecodeConfig, DecodeTrace, decode_batch
from .edits import apply_action
from .metrics import evaluate_corpus, render_report
from .model import (
    HeadTargets,
    ModelConfig,
    finite_diff_check,
    init_params,
    load_checkpoint,
    loss_and_gradients,
    read_checkpoint_vocabs,
)
from .oracle import brute_force_oracle, num_ops, oracle_action
from .tasks import TaskSpec, load_parallel_corpus, write_task_files
from .training import (
    NoiseConfig,
    RollInConfig,
    TrainConfig,
    metrics_log_lines,
    train,
)
from .vocab import (
    BOS,
    EOS,
    PLH,
    Sequence,
    build_vocabulary,
    encode_constraints,
    parse_constraint_line,
    read_lines,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    d_model: int = 64
    n_layers_enc: int = 2
    n_layers_dec: int = 2
    seed: int = 1
    lr: float = 3e-3
    batch_size: int = 64
    max_steps: int = 2000
    eval_interval: int = 200
    drop_prob: float = 0.5
    shuffle_k: float = 3.0
    alpha: float = 0.5
    beta: float = 0.5
    max_iters: int = 10
    gamma: float = 0.0
    l_max: int = 256


# file key -> (attribute, parser); `L_max` is the one key that is not its
# own attribute name
_CONFIG_KEYS: dict[str, tuple[str, type]] = {
    **{f.name: (f.name, type(f.default)) for f in fields(RunConfig) if f.name != "l_max"},
    "L_max": ("l_max", int),
}


def parse_run_config(path: str | Path | None) -> RunConfig:
    """Read `key = value` lines; blank lines and #-comments are skipped."""
    if path is None:
        return RunConfig()
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected `key = value`, got {raw!r}")
        if key not in _CONFIG_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        attr, cast = _CONFIG_KEYS[key]
        try:
            values[attr] = cast(value.strip())
        except ValueError:
            raise ValueError(
                f"{path}:{lineno}: bad {cast.__name__} for {key}: {value.strip()!r}"
            ) from None
    return RunConfig(**values)


def _train_config(rc: RunConfig) -> TrainConfig:
    return TrainConfig(
        noise=NoiseConfig(drop_prob=rc.drop_prob, shuffle_k=rc.shuffle_k),
        rollin=RollInConfig(alpha=rc.alpha, beta=rc.beta),
        lr=rc.lr,
        batch_size=rc.batch_size,
        max_steps=rc.max_steps,
        eval_interval=rc.eval_interval,
        seed=rc.seed,
    )


def cmd_train(args: argparse.Namespace) -> int:
    rc = parse_run_config(args.config)
    src_lines = read_lines(args.train_src)
    tgt_lines = read_lines(args.train_tgt)
    src_vocab = build_vocabulary(src_lines)
    tgt_vocab = build_vocabulary(tgt_lines)
    train_set = load_parallel_corpus(
        args.train_src, args.train_tgt, src_vocab, tgt_vocab, l_max=rc.l_max)
    valid_set = load_parallel_corpus(
        args.valid_src, args.valid_tgt, src_vocab, tgt_vocab, l_max=rc.l_max)

    model_cfg = ModelConfig(
        src_vocab_size=src_vocab.size,
        tgt_vocab_size=tgt_vocab.size,
        d_model=rc.d_model,
        n_layers_enc=rc.n_layers_enc,
        n_layers_dec=rc.n_layers_dec,
        l_max=rc.l_max,
        seed=rc.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / "model.ckpt"
    params, rows = train(
        train_set, valid_set, model_cfg, _train_config(rc), str(ckpt),
        src_vocab=src_vocab, tgt_vocab=tgt_vocab,
    )
    metrics_path = out / "metrics.tsv"
    metrics_path.write_text(
        "".join(line + "\n" for line in metrics_log_lines(rows)), encoding="utf-8")

    report = [f"checkpoint\t{ckpt}", f"metrics\t{metrics_path}"]
    if rows:
        best = max(rows, key=lambda r: r[2])
        report.append(f"best_valid_bleu\t{best[2]:.4f}")
        report.append(f"best_valid_exact\t{best[3]:.4f}")
    if args.figures and rows:
        from .plots import plot_training_curves

        fig_dir = Path(args.figures)
        fig_dir.mkdir(parents=True, exist_ok=True)
        fig = plot_training_curves(rows, fig_dir / "training_curves.png")
        report.append(f"figure\t{fig}")
    print("\n".join(report))
    return 0


def _encode_sources(lines, vocab, l_max):
    sources = []
    for lineno, line in enumerate(lines, 1):
        seq = vocab.encode(line)
        if len(seq) > l_max:
            raise ValueError(f"input line {lineno} longer than L_max = {l_max}")
        sources.append(seq)
    return sources


def cmd_decode(args: argparse.Namespace) -> int:
    if args.hard and not args.constraints:
        raise ValueError("--hard needs --constraints")
    params, cfg = load_checkpoint(args.ckpt)
    src_vocab, tgt_vocab = read_checkpoint_vocabs(args.ckpt)
    sources = _encode_sources(read_lines(args.input), src_vocab, cfg.l_max)

    mode = "unconstrained"
    constraint_sets = None
    if args.constraints:
        mode = "hard" if args.hard else "soft"
        constraint_sets = [
            encode_constraints(tgt_vocab, parse_constraint_line(line), mode)
            for line in read_lines(args.constraints)
        ]
    decode_cfg = DecodeConfig(max_iters=args.max_iters, gamma=args.gamma, mode=mode)
    outs, traces = decode_batch(
        params, sources, constraint_sets, decode_cfg, threads=args.threads)

    out_path = Path(args.output)
    out_path.write_text(
        "".join(tgt_vocab.detokenize(seq) + "\n" for seq in outs), encoding="utf-8")
    report = [f"output\t{out_path}", f"sentences\t{len(outs)}"]
    if args.trace:
        trace_path = Path(args.trace)
        trace_path.write_text(
            "".join(
                f"{t.iterations}\t{t.repositions}\t{t.deletions}"
                f"\t{t.insertions}\t{t.wall_ms:.3f}\n"
                for t in traces
            ),
            encoding="utf-8",
        )
        report.append(f"trace\t{trace_path}")
    print("\n".join(report))
    return 0


def _read_traces(path) -> list[DecodeTrace]:
    traces = []
    for lineno, line in enumerate(read_lines(path), 1):
        parts = line.split("\t")
        if len(parts) != 5:
            raise ValueError(f"{path}:{lineno}: expected 5 trace fields, got {len(parts)}")
        it, rps, dels, ins = (int(p) for p in parts[:4])
        traces.append(DecodeTrace(it, rps, dels, ins, float(parts[4])))
    return traces


def cmd_evaluate(args: argparse.Namespace) -> int:
    hyps = read_lines(args.hyp)
    refs = read_lines(args.ref)
    constraint_sets = None
    if args.constraints:
        constraint_sets = [parse_constraint_line(l) for l in read_lines(args.constraints)]
    traces = _read_traces(args.trace) if args.trace else None
    report = evaluate_corpus(hyps, refs, constraint_sets, traces)
    lines = render_report(report)
    if args.figures:
        from .plots import plot_metric_summary, plot_op_stats

        fig_dir = Path(args.figures)
        fig_dir.mkdir(parents=True, exist_ok=True)
        lines.append(f"figure\t{plot_metric_summary(report, fig_dir / 'metric_summary.png')}")
        if report.ops is not None:
            lines.append(f"figure\t{plot_op_stats(report.ops, fig_dir / 'op_stats.png')}")
    print("\n".join(lines))
    return 0


def _content_sequences(vocab_size: int, max_len: int) -> list[Sequence]:
    tokens = range(4, 4 + vocab_size)
    seqs = []
    for length in range(max_len + 1):
        for combo in itertools.product(tokens, repeat=length):
            seqs.append(Sequence.from_content(combo))
    return seqs


def cmd_oracle_check(args: argparse.Namespace) -> int:
    seqs = _content_sequences(args.vocab, args.max_len)
    mismatches = 0
    for y in seqs:
        for y_star in seqs:
            if num_ops(y, y_star) != brute_force_oracle(y, y_star):
                mismatches += 1
                logger.error("cost mismatch: %s -> %s", y.ids, y_star.ids)
    print(f"exhaustive_pairs\t{len(seqs) ** 2}")
    print(f"mismatches\t{mismatches}")

    rng = np.random.default_rng(args.seed)
    failures = 0
    for _ in range(args.samples):
        y = Sequence.from_content(
            tuple(int(t) for t in rng.integers(4, 24, size=rng.integers(0, 13))))
        y_star = Sequence.from_content(
            tuple(int(t) for t in rng.integers(4, 24, size=rng.integers(0, 13))))
        result = oracle_action(y, y_star)
        if apply_action(y, result.action).ids != y_star.ids:
            failures += 1
            logger.error("round-trip failure: %s -> %s", y.ids, y_star.ids)
    print(f"round_trips\t{args.samples}")
    print(f"failures\t{failures}")
    ok = mismatches == 0 and failures == 0
    print(f"result\t{'pass' if ok else 'fail'}")
    return 0 if ok else 1


def _grad_check_example() -> tuple[Sequence, Sequence, HeadTargets]:
    source = Sequence.from_content((5, 6, 7))
    y = Sequence((BOS, 4, PLH, 8, PLH, EOS))
    targets = HeadTargets(
        reposition=(1, 0, 3, 2, 4, 6),
        placeholders=(1, 0, 2, 0, 0),
        fills=(9, 10),
    )
    return source, y, targets


def cmd_grad_check(args: argparse.Namespace) -> int:
    rc = parse_run_config(args.config)
    source, y, targets = _grad_check_example()
    worst = 0.0
    ok = True
    for seed in range(args.seed, args.seed + args.seeds):
        cfg = ModelConfig(
            src_vocab_size=12,
            tgt_vocab_size=12,
            d_model=rc.d_model,
            n_layers_enc=rc.n_layers_enc,
            n_layers_dec=rc.n_layers_dec,
            l_max=16,
            seed=seed,
        )
        params = init_params(cfg)
        analytic = None
        if args.corrupt:
            _, analytic = loss_and_gradients(params, source, y, targets)
            analytic["w_tok"][0, 0] += 1e-2
        report = finite_diff_check(
            params, source, y, targets,
            step=args.step, tol=args.tol, analytic_grads=analytic,
        )
        worst = max(worst, report.max_rel_err)
        ok = ok and report.ok
        print(f"seed\t{seed}\tmax_rel_err\t{report.max_rel_err:.3e}")
    print(f"worst_rel_err\t{worst:.3e}")
    print(f"tolerance\t{args.tol:.1e}")
    print(f"result\t{'pass' if ok else 'fail'}")
    return 0 if ok else 1


def cmd_make_task(args: argparse.Namespace) -> int:
    spec = TaskSpec(
        kind=args.kind,
        vocab_size=args.vocab_size,
        len_range=(args.len_min, args.len_max),
        n_pairs=args.train + args.valid + args.test,
        seed=args.seed,
    )
    written = write_task_files(
        spec, args.out, n_train=args.train, n_valid=args.valid, n_test=args.test)
    print("\n".join(f"file\t{path}" for _, path in sorted(written.items())))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="editgen",
        description="Edit-based sequence generation: train, decode, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="imitation-train a model on parallel text")
    p.add_argument("--config", help="key = value run configuration file")
    p.add_argument("--train-src", required=True)
    p.add_argument("--train-tgt", required=True)
    p.add_argument("--valid-src", required=True)
    p.add_argument("--valid-tgt", required=True)
    p.add_argument("--out", required=True, help="directory for checkpoint and metrics")
    p.add_argument("--figures", help="directory for rendered figures")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("decode", help="iteratively refine outputs for input lines")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--constraints", help="tab-separated phrases per line")
    p.add_argument("--hard", action="store_true",
                   help="guarantee constraint tokens survive to the output")
    p.add_argument("--max-iters", type=int, default=10)
    p.add_argument("--gamma", type=float, default=0.0,
                   help="length bonus subtracted from the empty-gap score")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--output", required=True)
    p.add_argument("--trace", help="write per-sentence edit counts here")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("evaluate", help="score hypotheses against references")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--constraints")
    p.add_argument("--trace")
    p.add_argument("--figures", help="directory for rendered figures")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("oracle-check",
                       help="exhaustive + randomized verification of the edit oracle")
    p.add_argument("--max-len", type=int, default=3)
    p.add_argument("--vocab", type=int, default=3)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("grad-check",
                       help="compare backprop gradients against finite differences")
    p.add_argument("--config", help="run configuration (small d_model recommended)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--seeds", type=int, default=1, help="number of seeds starting at --seed")
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("make-task", help="write a synthetic parallel corpus")
    p.add_argument("--kind", required=True, choices=("copy", "swap_translate", "duplicate"))
    p.add_argument("--out", required=True)
    p.add_argument("--vocab-size", type=int, default=20)
    p.add_argument("--len-min", type=int, default=4)
    p.add_argument("--len-max", type=int, default=10)
    p.add_argument("--train", type=int, default=2000)
    p.add_argument("--valid", type=int, default=200)
    p.add_argument("--test", type=int, default=200)
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=cmd_make_task)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if not logging.getLogger().handlers:
        logging.basicConfig(
            stream=sys.stderr, level=logging.INFO,
            format="%(levelname)s %(name)s: %(message)s",
        )
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        logger.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
