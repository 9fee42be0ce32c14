"""End-to-end command-line behavior: pipelines, exit codes, determinism."""
from __future__ import annotations

import pytest

from editgen.cli import RunConfig, main, parse_run_config


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A tiny trained pipeline shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    task = root / "task"
    run = root / "run"
    assert main([
        "make-task", "--kind", "copy", "--out", str(task),
        "--vocab-size", "8", "--len-min", "2", "--len-max", "4",
        "--train", "40", "--valid", "8", "--test", "8",
    ]) == 0
    cfg = root / "run.cfg"
    cfg.write_text(
        "# small setup for tests\n"
        "d_model = 16\nn_layers_enc = 1\nn_layers_dec = 1\n"
        "max_steps = 40\neval_interval = 20\nbatch_size = 4\nL_max = 32\n"
    )
    assert main([
        "train", "--config", str(cfg),
        "--train-src", str(task / "train.src"), "--train-tgt", str(task / "train.tgt"),
        "--valid-src", str(task / "valid.src"), "--valid-tgt", str(task / "valid.tgt"),
        "--out", str(run),
    ]) == 0
    return {"task": task, "run": run, "cfg": cfg, "root": root}


def test_run_config_defaults():
    assert parse_run_config(None) == RunConfig()


def test_run_config_parses_all_keys(tmp_path):
    text = "\n".join([
        "d_model = 32", "n_layers_enc = 1", "n_layers_dec = 3", "seed = 9",
        "lr = 0.001", "batch_size = 4", "max_steps = 100", "eval_interval = 50",
        "drop_prob = 0.3", "shuffle_k = 2.0", "alpha = 0.4", "beta = 0.6",
        "max_iters = 5", "gamma = 1.5", "L_max = 64", "", "# comment",
    ])
    path = tmp_path / "full.cfg"
    path.write_text(text)
    rc = parse_run_config(path)
    assert rc.d_model == 32 and rc.n_layers_dec == 3 and rc.seed == 9
    assert rc.lr == 0.001 and rc.gamma == 1.5 and rc.l_max == 64


def test_run_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("dropout = 0.1\n")
    with pytest.raises(ValueError, match="unknown config key"):
        parse_run_config(path)
    path.write_text("d_model eight\n")
    with pytest.raises(ValueError, match="key = value"):
        parse_run_config(path)
    path.write_text("d_model = eight\n")
    with pytest.raises(ValueError, match="bad int"):
        parse_run_config(path)


def test_train_reports_artifacts(workspace, capsys):
    run = workspace["run"]
    assert (run / "model.ckpt").exists()
    assert (run / "metrics.tsv").exists()
    lines = (run / "metrics.tsv").read_text().splitlines()
    assert len(lines) == 2  # 40 steps at interval 20
    assert all(len(line.split("\t")) == 4 for line in lines)


def test_train_is_repeatable(workspace, tmp_path):
    task, cfg = workspace["task"], workspace["cfg"]
    args = [
        "train", "--config", str(cfg),
        "--train-src", str(task / "train.src"), "--train-tgt", str(task / "train.tgt"),
        "--valid-src", str(task / "valid.src"), "--valid-tgt", str(task / "valid.tgt"),
    ]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "metrics.tsv").read_bytes() == \
        (tmp_path / "b" / "metrics.tsv").read_bytes()
    assert (tmp_path / "a" / "model.ckpt").read_bytes() == \
        (tmp_path / "b" / "model.ckpt").read_bytes()


def test_decode_outputs_are_deterministic(workspace, tmp_path):
    run, task = workspace["run"], workspace["task"]
    outs = []
    for name in ("x", "y"):
        out = tmp_path / f"{name}.hyp"
        trace = tmp_path / f"{name}.trace"
        assert main([
            "decode", "--ckpt", str(run / "model.ckpt"),
            "--input", str(task / "test.src"),
            "--output", str(out), "--trace", str(trace),
        ]) == 0
        outs.append((out.read_bytes(), trace.read_text()))
    assert outs[0][0] == outs[1][0]
    strip_wall = lambda text: [l.rsplit("\t", 1)[0] for l in text.splitlines()]
    assert strip_wall(outs[0][1]) == strip_wall(outs[1][1])
    n_lines = len((task / "test.src").read_text().splitlines())
    assert len(strip_wall(outs[0][1])) == n_lines


def test_decode_threads_match_serial(workspace, tmp_path):
    run, task = workspace["run"], workspace["task"]
    files = {}
    for threads in ("1", "3"):
        out = tmp_path / f"t{threads}.hyp"
        assert main([
            "decode", "--ckpt", str(run / "model.ckpt"),
            "--input", str(task / "test.src"),
            "--output", str(out), "--threads", threads,
        ]) == 0
        files[threads] = out.read_bytes()
    assert files["1"] == files["3"]


def test_hard_decode_preserves_constraint_tokens(workspace, tmp_path):
    run, task = workspace["run"], workspace["task"]
    n_lines = len((task / "test.src").read_text().splitlines())
    constraints = tmp_path / "cons.txt"
    constraints.write_text("w001\n" * n_lines)
    out = tmp_path / "hard.hyp"
    assert main([
        "decode", "--ckpt", str(run / "model.ckpt"),
        "--input", str(task / "test.src"), "--constraints", str(constraints),
        "--hard", "--output", str(out),
    ]) == 0
    for line in out.read_text().splitlines():
        assert "w001" in line.split()


def test_hard_requires_constraints(workspace, tmp_path):
    run, task = workspace["run"], workspace["task"]
    assert main([
        "decode", "--ckpt", str(run / "model.ckpt"),
        "--input", str(task / "test.src"),
        "--hard", "--output", str(tmp_path / "no.hyp"),
    ]) == 2


def test_evaluate_reports_all_sections(workspace, tmp_path, capsys):
    task = workspace["task"]
    ref = task / "test.tgt"
    constraints = tmp_path / "c.txt"
    n_lines = len(ref.read_text().splitlines())
    first_tokens = [line.split()[0] for line in ref.read_text().splitlines()]
    constraints.write_text("".join(t + "\n" for t in first_tokens))
    trace = tmp_path / "t.tsv"
    trace.write_text("1\t0\t0\t2\t1.500\n" * n_lines)
    assert main([
        "evaluate", "--hyp", str(ref), "--ref", str(ref),
        "--constraints", str(constraints), "--trace", str(trace),
        "--figures", str(tmp_path / "figs"),
    ]) == 0
    out = capsys.readouterr().out
    assert "bleu\t100.0000" in out
    assert "cpr\t1.0000" in out
    assert "mean_insertions\t2.0000" in out
    assert (tmp_path / "figs" / "metric_summary.png").exists()
    assert (tmp_path / "figs" / "op_stats.png").exists()


def test_missing_file_exits_2(tmp_path, caplog):
    assert main([
        "train",
        "--train-src", str(tmp_path / "absent.src"), "--train-tgt", str(tmp_path / "absent.tgt"),
        "--valid-src", str(tmp_path / "absent.src"), "--valid-tgt", str(tmp_path / "absent.tgt"),
        "--out", str(tmp_path / "out"),
    ]) == 2
    assert "absent.src" in caplog.text


def test_unknown_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["serve"])
    assert exc.value.code == 2


def test_oracle_check_passes(capsys):
    assert main(["oracle-check", "--max-len", "2", "--vocab", "2", "--samples", "50"]) == 0
    out = capsys.readouterr().out
    assert "exhaustive_pairs\t49" in out  # (1 + 2 + 4)^2 sequences
    assert "mismatches\t0" in out
    assert "result\tpass" in out


def test_grad_check_passes_and_corruption_fails(tmp_path, capsys):
    cfg = tmp_path / "small.cfg"
    cfg.write_text("d_model = 8\nn_layers_enc = 1\nn_layers_dec = 1\n")
    assert main(["grad-check", "--config", str(cfg), "--seed", "3"]) == 0
    assert "result\tpass" in capsys.readouterr().out
    assert main(["grad-check", "--config", str(cfg), "--seed", "3", "--corrupt"]) == 1
    assert "result\tfail" in capsys.readouterr().out
