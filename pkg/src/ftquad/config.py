"""Run configuration: strict YAML parsing for train/eval/serve runs."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field

import yaml

from . import faults
from .env import EnvConfig, RewardConfig
from .evalkit import EvalScenario
from .ppo import MODE_FULL, PpoConfig
from .simcore import RobotModel


class ConfigError(ValueError):
    pass


@dataclass
class TrainSection:
    iterations: int = 500
    mode: str = MODE_FULL
    checkpoint_every: int = 100
    gt_mix_iters: int | None = None


@dataclass
class RunConfig:
    mode: str
    seed: int = 0
    output_dir: str = "runs/out"
    env: EnvConfig = field(default_factory=EnvConfig)
    ppo: PpoConfig = field(default_factory=PpoConfig)
    train: TrainSection = field(default_factory=TrainSection)


def _build_dataclass(cls, data: dict, path: str):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(f"unknown key {path}.{key}")
        ftype = fields[key].type
        if key == "rewards" and isinstance(value, dict):
            value = _build_dataclass(RewardConfig, value, f"{path}.rewards")
        elif isinstance(value, list):
            value = tuple(
                tuple(v) if isinstance(v, list) else v for v in value
            )
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid {path} section: {e}") from e


def load_run_config(path: str) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"malformed YAML in {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    known = {"mode", "seed", "output_dir", "env", "ppo", "train"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    if "mode" not in data:
        raise ConfigError("missing required key 'mode' (train | eval | serve)")
    if data["mode"] not in ("train", "eval", "serve"):
        raise ConfigError(f"mode must be train | eval | serve, got {data['mode']!r}")
    if "env" not in data:
        raise ConfigError("missing required section 'env'")
    env = _build_dataclass(EnvConfig, data["env"], "env")
    ppo_cfg = _build_dataclass(PpoConfig, data.get("ppo", {}), "ppo")
    train = _build_dataclass(TrainSection, data.get("train", {}), "train")
    if ppo_cfg.n_envs != env.n_envs:
        ppo_cfg = dataclasses.replace(ppo_cfg, n_envs=env.n_envs)
    return RunConfig(
        mode=data["mode"],
        seed=int(data.get("seed", 0)),
        output_dir=str(data.get("output_dir", "runs/out")),
        env=env,
        ppo=ppo_cfg,
        train=train,
    )


def load_scenario(path: str, model: RobotModel | None = None) -> EvalScenario:
    """Parse a scenario file: terrain, command profile, fault schedule."""
    model = model or RobotModel()
    if not os.path.exists(path):
        raise ConfigError(f"scenario file not found: {path}")
    with open(path, encoding="utf-8") as f:
        data = yaml.safe_load(f)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    known = {"terrain", "commands", "fault_schedule", "episode_length_s",
             "repetitions", "seed"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
    terrain = data.get("terrain", {}) or {}
    schedule = []
    for entry in data.get("fault_schedule", []) or []:
        entry = dict(entry)
        t = float(entry.pop("time"))
        spec = faults.spec_from_config(entry, model)
        schedule.append((t, spec))
    commands = [tuple(float(v) for v in row) for row in data.get(
        "commands", [[0.0, 0.7, 0.0, 0.0]])]
    try:
        return EvalScenario(
            terrain_kind=terrain.get("kind", "smooth"),
            terrain_level=int(terrain.get("level", 0)),
            command_profile=commands,
            fault_schedule=schedule,
            episode_length_s=float(data.get("episode_length_s", 10.0)),
            repetitions=int(data.get("repetitions", 1)),
            seed=int(data.get("seed", 0)),
        )
    except ValueError as e:
        raise ConfigError(f"invalid scenario: {e}") from e


def dump_effective_config(cfg: RunConfig, path: str) -> None:
    """Snapshot the fully resolved run configuration next to outputs."""

    def to_plain(obj):
        if dataclasses.is_dataclass(obj):
            return {k: to_plain(v) for k, v in dataclasses.asdict(obj).items()}
        if isinstance(obj, tuple):
            return [to_plain(v) for v in obj]
        if hasattr(obj, "tolist"):
            return obj.tolist()
        return obj

    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(to_plain(cfg), f, sort_keys=False)
