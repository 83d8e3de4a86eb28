import filecmp
import json

import pytest

from safegrid.cli import main
from safegrid.config import ConfigError, RunConfig

TINY = ["--set", "run.seeds=0", "--set", "learner.total_steps=300", "--set", "refine.f=100",
        "--set", "run.eval_episodes=1", "--set", "env.max_episode_length=60"]


def test_pf_check_fixture(capsys):
    assert main(["pf-check"]) == 0
    out = capsys.readouterr().out
    assert "converged=True" in out and "C_v=0 C_l=0" in out


def test_pf_check_divergence_is_numeric_error(tmp_path, case5, capsys):
    from safegrid.env import write_chronics
    from safegrid.fixtures import constant_chronics

    path = tmp_path / "heavy.csv"
    write_chronics(constant_chronics(case5, 3, scale=30.0, horizon=2), path)
    assert main(["pf-check", "--chronics", str(path)]) == 2
    assert "numeric error" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(capsys):
    assert main(["pf-check", "--bogus"]) == 1
    assert "usage" in capsys.readouterr().err


def test_missing_case_file_is_io_error(tmp_path, capsys):
    assert main(["pf-check", "--case", str(tmp_path / "nope.yaml")]) == 3


def test_bad_config_value_is_user_error(capsys):
    assert main(["train", "--set", "learner.gamma=2"]) == 1
    assert "gamma" in capsys.readouterr().err


def test_config_echo_round_trip():
    cfg = RunConfig.from_ini("[learner]\nN_LLM = 3\n".replace("learner", "refine"),
                             ["learner.alpha=0.3"])
    assert cfg.refine.N_LLM == 3 and cfg.learner.alpha == 0.3
    assert RunConfig.from_ini(cfg.to_ini()) == cfg
    with pytest.raises(ConfigError):
        RunConfig.from_ini("[learner]\nbogus = 1\n")
    with pytest.raises(ConfigError):
        RunConfig.from_ini("", ["advisor.mode=remote"])


def test_gen_fixtures_then_train_and_eval(tmp_path):
    fx = tmp_path / "fx"
    assert main(["gen-fixtures", "--out", str(fx)]) == 0
    assert {p.name for p in fx.iterdir()} >= {"case5.yaml", "case5_stressed.csv", "desk.ini"}
    run = tmp_path / "run"
    assert main(["train", "--config", str(fx / "desk.ini"), "--out", str(run)] + TINY) == 0
    for name in ("eval.csv", "eval_curves.svg", "summary.json", "config.resolved.ini",
                 "checkpoint_seed0.npz"):
        assert (run / name).exists(), name
    summary = json.loads((run / "summary.json").read_text())
    assert "0" in summary["seeds"]
    ev = tmp_path / "ev"
    assert main(["eval", "--config", str(run / "config.resolved.ini"),
                 "--checkpoint", str(run / "checkpoint_seed0.npz"), "--out", str(ev),
                 "--name", "eval"]) == 0
    assert (ev / "eval.csv").read_text() == (run / "eval.csv").read_text()


def test_plain_ablation_path_runs(tmp_path):
    args = ["train", "--out", str(tmp_path), "--set", "advisor.mode=off",
            "--set", "learner.beta=0"] + TINY
    assert main(args) == 0


def test_refine_demo(capsys):
    assert main(["refine-demo", "--config", "bundled:desk", "--steps", "400",
                 "--candidates", "1"]) == 0
    out = capsys.readouterr().out
    assert "round 1" in out


def test_checkpoint_not_found_is_io_error(tmp_path):
    assert main(["eval", "--checkpoint", str(tmp_path / "x.npz")] + TINY) == 3


def test_rerun_from_echo_is_bit_identical(tmp_path, mock_dir):
    first = tmp_path / "a"
    args = ["--set", "advisor.mode=mock", "--set", f"advisor.directory={mock_dir}"] + TINY
    assert main(["train", "--config", "bundled:desk", "--out", str(first)] + args) == 0
    second = tmp_path / "b"
    assert main(["train", "--config", str(first / "config.resolved.ini"),
                 "--out", str(second)]) == 0
    assert filecmp.cmp(first / "eval.csv", second / "eval.csv", shallow=False)
    summaries = [json.loads((d / "summary.json").read_text()) for d in (first, second)]
    for s in summaries:
        s["seeds"]["0"].pop("checkpoint")
    assert summaries[0] == summaries[1]
    echo = [RunConfig.read(d / "config.resolved.ini") for d in (first, second)]
    assert echo[0].fingerprint() == echo[1].fingerprint()
    assert _arrays_equal(first / "checkpoint_seed0.npz", second / "checkpoint_seed0.npz")


def _arrays_equal(a, b):
    import numpy as np

    with np.load(a) as x, np.load(b) as y:
        return set(x.files) == set(y.files) and all(
            np.array_equal(x[k], y[k]) for k in x.files)
