"""Configuration parsing and command-line interface tests."""

import os

import numpy as np
import pytest
import yaml

from ftquad import cli, ppo
from ftquad.config import (
    ConfigError,
    dump_effective_config,
    load_run_config,
    load_scenario,
)
from ftquad.env import OBS_DIM, PRIV_DIM


VALID_RUN = {
    "mode": "train",
    "seed": 3,
    "output_dir": "runs/x",
    "env": {"n_envs": 4, "terrain_kinds": ["smooth"], "p_fault": 0.25},
    "ppo": {"horizon": 8, "lr": 5e-4},
    "train": {"iterations": 2, "mode": "full"},
}


def write_yaml(path, data):
    with open(path, "w") as f:
        yaml.safe_dump(data, f)
    return str(path)


class TestLoadRunConfig:
    def test_valid_round_trip(self, tmp_path):
        cfg = load_run_config(write_yaml(tmp_path / "c.yaml", VALID_RUN))
        assert cfg.mode == "train"
        assert cfg.seed == 3
        assert cfg.env.n_envs == 4
        assert cfg.env.p_fault == 0.25
        assert cfg.env.terrain_kinds == ("smooth",)
        assert cfg.ppo.horizon == 8
        assert cfg.ppo.lr == 5e-4
        assert cfg.ppo.n_envs == 4  # synced from env section
        assert cfg.train.iterations == 2

    def test_unknown_env_key_named_in_error(self, tmp_path):
        bad = dict(VALID_RUN, env=dict(VALID_RUN["env"], bogus_knob=1))
        with pytest.raises(ConfigError, match=r"env\.bogus_knob"):
            load_run_config(write_yaml(tmp_path / "c.yaml", bad))

    def test_unknown_top_level_key(self, tmp_path):
        bad = dict(VALID_RUN, extra_section={})
        with pytest.raises(ConfigError, match="extra_section"):
            load_run_config(write_yaml(tmp_path / "c.yaml", bad))

    def test_missing_mode(self, tmp_path):
        bad = {k: v for k, v in VALID_RUN.items() if k != "mode"}
        with pytest.raises(ConfigError, match="mode"):
            load_run_config(write_yaml(tmp_path / "c.yaml", bad))

    def test_missing_env_section(self, tmp_path):
        bad = {k: v for k, v in VALID_RUN.items() if k != "env"}
        with pytest.raises(ConfigError, match="env"):
            load_run_config(write_yaml(tmp_path / "c.yaml", bad))

    def test_bad_mode_value(self, tmp_path):
        bad = dict(VALID_RUN, mode="deploy")
        with pytest.raises(ConfigError, match="deploy"):
            load_run_config(write_yaml(tmp_path / "c.yaml", bad))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_run_config(str(tmp_path / "absent.yaml"))

    def test_effective_dump_reloads(self, tmp_path):
        cfg = load_run_config(write_yaml(tmp_path / "c.yaml", VALID_RUN))
        out = tmp_path / "effective.yaml"
        dump_effective_config(cfg, str(out))
        cfg2 = load_run_config(str(out))
        assert cfg2.env == cfg.env
        assert cfg2.ppo == cfg.ppo
        assert cfg2.train == cfg.train


class TestLoadScenario:
    def test_bundled_scenario_parses(self):
        sc = load_scenario("configs/scenarios/transition_fr_calf.yaml")
        assert sc.terrain_kind == "smooth"
        assert len(sc.fault_schedule) == 1
        t, spec = sc.fault_schedule[0]
        assert t == 3.0
        assert spec.faulty and spec.joint_index == 5 and spec.kind == "locked"
        # "current" keeps q_cen unresolved until the fault is installed
        assert np.isnan(spec.q_cen)

    def test_q_def_resolves_to_default_angle(self, tmp_path):
        import yaml

        path = tmp_path / "sc.yaml"
        path.write_text(yaml.safe_dump({
            "terrain": {"kind": "smooth", "level": 0},
            "commands": [[0.0, 0.5, 0.0, 0.0]],
            "fault_schedule": [
                {"time": 1.0, "joint": "FR_calf", "kind": "locked",
                 "q_cen": "q_def"},
            ],
            "episode_length_s": 4.0,
            "repetitions": 2,
            "seed": 0,
        }))
        sc = load_scenario(str(path))
        assert np.isclose(sc.fault_schedule[0][1].q_cen, -1.5)

    def test_unknown_key_rejected(self, tmp_path):
        path = write_yaml(tmp_path / "s.yaml", {"terrain": {}, "surprise": 1})
        with pytest.raises(ConfigError, match="surprise"):
            load_scenario(path)


TINY_RUN = {
    "mode": "train",
    "seed": 0,
    "env": {"n_envs": 2, "terrain_kinds": ["smooth"], "p_fault": 0.5,
            "episode_length_s": 2.0},
    "ppo": {"horizon": 4, "epochs_per_update": 1, "minibatches_per_epoch": 1},
    "train": {"iterations": 2, "checkpoint_every": 1},
}


class TestCli:
    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as e:
            cli.main(["--help"])
        assert e.value.code == 0
        assert "train" in capsys.readouterr().out

    def test_malformed_config_exit_2(self, tmp_path, capsys):
        bad = {k: v for k, v in TINY_RUN.items() if k != "mode"}
        path = write_yaml(tmp_path / "c.yaml", bad)
        assert cli.main(["train", "--config", path]) == 2
        assert "mode" in capsys.readouterr().err

    def test_train_writes_artifacts(self, tmp_path):
        path = write_yaml(tmp_path / "c.yaml", TINY_RUN)
        out = tmp_path / "run"
        rc = cli.main(["train", "--config", path, "--output", str(out)])
        assert rc == 0
        assert (out / "config.yaml").exists()
        assert (out / "metrics.csv").exists()
        assert (out / "checkpoint.ftq").exists()

    def test_train_deterministic(self, tmp_path):
        path = write_yaml(tmp_path / "c.yaml", TINY_RUN)
        rows = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert cli.main(["train", "--config", path, "--output", str(out)]) == 0
            with open(out / "metrics.csv") as f:
                rows.append(f.read())
        assert rows[0] == rows[1]

    def test_eval_end_to_end(self, tmp_path, capsys):
        agent = ppo.Agent(obs_dim=OBS_DIM, act_dim=12, priv_dim=PRIV_DIM, seed=0)
        ckpt = tmp_path / "agent.ftq"
        agent.save(str(ckpt))
        scenario = write_yaml(
            tmp_path / "s.yaml",
            {
                "terrain": {"kind": "smooth", "level": 0},
                "commands": [[0.0, 0.3, 0.0, 0.0]],
                "episode_length_s": 0.5,
                "repetitions": 2,
            },
        )
        out = tmp_path / "eval"
        rc = cli.main(["eval", "--checkpoint", str(ckpt),
                       "--scenario", scenario, "--out", str(out)])
        assert rc == 0
        assert (out / "report.csv").exists()
        assert (out / "series.jsonl").exists()
        assert "ATE" in capsys.readouterr().out

    def test_missing_checkpoint_exit_2(self, tmp_path, capsys):
        scenario = write_yaml(tmp_path / "s.yaml", {"episode_length_s": 0.5})
        rc = cli.main(["eval", "--checkpoint", str(tmp_path / "nope.ftq"),
                       "--scenario", scenario, "--out", str(tmp_path / "o")])
        assert rc == 2
