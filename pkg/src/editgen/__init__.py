"""Edit-based non-autoregressive sequence generation.

Sequences are refined by repeated edit actions: a reposition pass that
reorders or deletes tokens, a placeholder pass that opens insertion slots,
and a token pass that fills them.  The package provides the edit calculus,
a constrained edit-distance oracle, a small transformer policy trained by
dual-path imitation, an iterative decoder with soft and hard lexical
constraints, evaluation metrics, synthetic tasks, and a CLI.
"""
from .decoding import DecodeConfig, DecodeTrace, decode, decode_batch, greedy_action
from .edits import K_MAX, Action, apply_action, apply_placeholders, apply_reposition, fill_tokens
from .metrics import EvalReport, OpStats, bleu, cpr, evaluate_corpus, op_stats, render_report, ribes_simplified
from .model import (
    ModelConfig,
    Parameters,
    finite_diff_check,
    init_params,
    load_checkpoint,
    parameter_count,
    save_checkpoint,
)
from .oracle import EditOp, EditScript, OracleResult, align, brute_force_oracle, num_ops, oracle_action
from .tasks import TaskSpec, generate, load_parallel_corpus, write_task_files
from .training import NoiseConfig, RollInConfig, TrainConfig, noise_reference, train, train_step
from .vocab import (
    BOS,
    EOS,
    PLH,
    UNK,
    ConstraintSet,
    Sequence,
    TrainingPair,
    Vocabulary,
    build_vocabulary,
    sample_constraints,
)

__version__ = "0.1.0"
