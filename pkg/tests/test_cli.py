import os

import numpy as np
import pytest

from passim.cli import main
from passim.config import (ConfigError, RunConfig, config_equal,
                           format_config, load_config)


SMALL = [
    "sac.hidden=(8, 8)",
    "sac.batch_size=8",
    "sac.warmup_steps=8",
    "sac.episodes=2",
    "sac.eval_every=1",
    "sac.eval_episodes=1",
    "system.steps_per_episode=6",
    "evaluation.seeds=(0,)",
    "evaluation.episodes_per_seed=2",
    "evaluation.snapshot_steps=(2, 4)",
]


def run_dirs(root):
    return sorted(os.path.join(root, d) for d in os.listdir(root))


# -- config loading -----------------------------------------------------------

def test_defaults_match_reference_setup():
    cfg = load_config()
    assert cfg.system.n_pas == 4
    assert cfg.system.n_users == 3
    assert cfg.system.delta_max == 3.0
    assert cfg.system.lambda_move == 0.03
    assert cfg.system.area_side == 100.0
    assert cfg.system.carrier_freq == 28e9
    assert cfg.system.pa_height == 10.0
    assert cfg.system.dt == 4.0
    assert cfg.system.steps_per_episode == 80
    assert cfg.system.waveguide_y == (20.0, 40.0, 60.0, 80.0)
    assert cfg.mobility.v_max == 1.2
    assert cfg.sac.gamma == 0.99
    assert cfg.sac.batch_size == 256
    assert cfg.sac.buffer_capacity == 200_000
    assert cfg.sac.hidden == (256, 256)
    assert cfg.sac.lr_actor == 3e-4
    assert cfg.sac.lr_critic == 3e-4
    assert cfg.sac.lr_alpha == 3e-4
    assert cfg.sac.episodes == 400


def test_n_less_than_k_rejected():
    with pytest.raises(ConfigError, match="N must be >= K"):
        load_config(overrides=["system.n_users=5"])


def test_unknown_key_named_in_error():
    with pytest.raises(ConfigError, match="channel.bogus"):
        load_config(overrides=["channel.bogus=1"])


def test_type_mismatch_named_in_error():
    with pytest.raises(ConfigError, match="sac.batch_size"):
        load_config(overrides=["sac.batch_size=hello"])


def test_file_then_override_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("mobility.alpha = 0.5\nchannel.noise_power = 2e-10\n")
    cfg = load_config(str(path), overrides=["mobility.alpha=0.7"])
    assert cfg.mobility.alpha == 0.7
    assert cfg.channel.noise_power == 2e-10


def test_config_round_trip(tmp_path):
    cfg = load_config(overrides=["channel.noise_power=3e-11", "seed=9",
                                 "sac.hidden=(32, 32)"])
    path = tmp_path / "echo.cfg"
    path.write_text(format_config(cfg))
    cfg2 = load_config(str(path))
    assert config_equal(cfg, cfg2)


def test_waveguide_default_set():
    assert load_config().system.waveguide_y == (20.0, 40.0, 60.0, 80.0)


def test_waveguide_must_match_pa_count():
    with pytest.raises(ConfigError, match="waveguide_y"):
        load_config(overrides=["system.waveguide_y=(20.0, 40.0)"])


# -- subcommands -----------------------------------------------------------------

def test_train_twice_identical_curve(tmp_path):
    out = str(tmp_path / "runs")
    for _ in range(2):
        rc = main(["train", "--seed", "7", "--out", out] + SMALL)
        assert rc == 0
    dirs = run_dirs(out)
    assert len(dirs) == 2
    curves = [open(os.path.join(d, "training_curve.csv"), "rb").read()
              for d in dirs]
    assert curves[0] == curves[1]
    for d in dirs:
        assert os.path.exists(os.path.join(d, "checkpoint_final.npz"))
        assert os.path.exists(os.path.join(d, "resolved_config.txt"))


def test_resolved_config_round_trips(tmp_path):
    out = str(tmp_path / "runs")
    assert main(["train", "--seed", "3", "--out", out] + SMALL) == 0
    d = run_dirs(out)[0]
    cfg = load_config(os.path.join(d, "resolved_config.txt"))
    assert cfg.seed == 3
    assert cfg.sac.episodes == 2


def test_eval_without_checkpoint_fails(tmp_path):
    rc = main(["eval", "--out", str(tmp_path)] + SMALL)
    assert rc == 1


def test_eval_missing_checkpoint_file(tmp_path):
    rc = main(["eval", "--checkpoint", str(tmp_path / "nope.npz"),
               "--out", str(tmp_path)] + SMALL)
    assert rc == 1


def test_eval_emits_csv_files(tmp_path):
    out = str(tmp_path / "runs")
    assert main(["train", "--seed", "5", "--out", out] + SMALL) == 0
    ckpt = os.path.join(run_dirs(out)[0], "checkpoint_final.npz")
    out2 = str(tmp_path / "eval")
    assert main(["eval", "--checkpoint", ckpt, "--out", out2] + SMALL) == 0
    d = run_dirs(out2)[0]
    for name in ("eval_episodes.csv", "eval_summary.csv", "cdf.csv",
                 "resolved_config.txt"):
        assert os.path.exists(os.path.join(d, name)), name


def test_eval_twice_bit_identical(tmp_path):
    out = str(tmp_path / "runs")
    assert main(["train", "--seed", "5", "--out", out] + SMALL) == 0
    ckpt = os.path.join(run_dirs(out)[0], "checkpoint_final.npz")
    out2 = str(tmp_path / "eval")
    for _ in range(2):
        assert main(["eval", "--checkpoint", ckpt, "--out", out2] + SMALL) == 0
    d1, d2 = run_dirs(out2)
    for name in ("eval_episodes.csv", "eval_summary.csv", "cdf.csv"):
        b1 = open(os.path.join(d1, name), "rb").read()
        b2 = open(os.path.join(d2, name), "rb").read()
        assert b1 == b2, name


def test_case_study_emits_csvs(tmp_path):
    out = str(tmp_path / "runs")
    assert main(["train", "--seed", "5", "--out", out] + SMALL) == 0
    ckpt = os.path.join(run_dirs(out)[0], "checkpoint_final.npz")
    out2 = str(tmp_path / "cs")
    assert main(["case-study", "--checkpoint", ckpt, "--out", out2] + SMALL) == 0
    d = run_dirs(out2)[0]
    assert os.path.exists(os.path.join(d, "case_study.csv"))
    assert os.path.exists(os.path.join(d, "power_alloc.csv"))


def test_bad_config_key_exits_one(tmp_path):
    rc = main(["train", "--out", str(tmp_path), "nope.key=1"])
    assert rc == 1


def test_bad_usage_exits_one(tmp_path):
    rc = main(["train", "--episodes", "not-an-int"])
    assert rc == 1


def test_runtime_failure_exits_two(tmp_path, monkeypatch):
    import passim.cli as cli

    def boom(cfg, seed, out_dir, log_every):
        raise RuntimeError("forced")

    monkeypatch.setattr(cli.sac, "train", boom)
    rc = main(["train", "--out", str(tmp_path)] + SMALL)
    assert rc == 2
