"""Evaluation harness: tracking-error metric, scripted fault scenarios,
mid-run fault transitions, estimation metrics, and report export."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import faults
from .env import CONTROL_DT, EnvConfig, QuadrupedVecEnv
from .femnet import history_flatten, history_push, sigmoid

GRACE_WINDOW_S = 0.5
DETECTION_THRESHOLD = 0.5


def ate(commanded: np.ndarray, actual: np.ndarray) -> float:
    """Absolute tracking error: mean planar-velocity error norm, m/s."""
    commanded = np.asarray(commanded, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if commanded.shape[0] == 0:
        raise ValueError("empty velocity series")
    if commanded.shape != actual.shape:
        raise ValueError("commanded/actual length mismatch")
    err = commanded[..., :2] - actual[..., :2]
    return float(np.mean(np.linalg.norm(err, axis=-1)))


@dataclass
class EvalScenario:
    """A scripted evaluation: terrain, command profile, fault schedule."""

    terrain_kind: str = "smooth"
    terrain_level: int = 0
    # piecewise-constant (start_time_s, vx, vy, wz), sorted by time
    command_profile: list = field(default_factory=lambda: [(0.0, 0.7, 0.0, 0.0)])
    # (time_s, FaultSpec); empty schedule means no fault ever
    fault_schedule: list = field(default_factory=list)
    episode_length_s: float = 10.0
    repetitions: int = 1
    seed: int = 0

    def __post_init__(self):
        for t, _ in self.fault_schedule:
            if not 0.0 <= t <= self.episode_length_s:
                raise ValueError("fault schedule time outside the episode")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")

    def command_at(self, t: float) -> np.ndarray:
        cmd = np.zeros(3)
        for start, vx, vy, wz in self.command_profile:
            if t >= start:
                cmd[:] = (vx, vy, wz)
        return cmd

    @property
    def steps(self) -> int:
        return int(round(self.episode_length_s / CONTROL_DT))


@dataclass
class EvalReport:
    scenario: EvalScenario
    ate_per_episode: np.ndarray  # (reps,)
    success: np.ndarray  # (reps,) bool, True = no fall
    times: np.ndarray  # (steps,)
    commanded: np.ndarray  # (reps, steps, 3)
    actual: np.ndarray  # (reps, steps, 3) body linear velocity
    contacts: np.ndarray  # (reps, steps, 4)
    f_true: np.ndarray  # (reps, steps, 12)
    f_est: np.ndarray  # (reps, steps, 12) probabilities
    base_pose: np.ndarray  # (reps, steps, 7) position + quaternion

    @property
    def ate_mean(self) -> float:
        return float(self.ate_per_episode.mean())

    @property
    def ate_std(self) -> float:
        return float(self.ate_per_episode.std())

    @property
    def fall_rate(self) -> float:
        return float(1.0 - self.success.mean())

    def recompute_ate(self) -> np.ndarray:
        return np.array(
            [ate(self.commanded[r], self.actual[r]) for r in range(self.commanded.shape[0])]
        )

    def write_series_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for r in range(self.commanded.shape[0]):
                for t in range(self.times.shape[0]):
                    rec = {
                        "rep": r,
                        "t": round(float(self.times[t]), 6),
                        "commanded": self.commanded[r, t].tolist(),
                        "actual": self.actual[r, t].tolist(),
                        "contacts": self.contacts[r, t].astype(int).tolist(),
                        "f_true": self.f_true[r, t].astype(int).tolist(),
                        "f_est": [round(float(p), 5) for p in self.f_est[r, t]],
                        "base_pose": [round(float(v), 6) for v in self.base_pose[r, t]],
                    }
                    f.write(json.dumps(rec) + "\n")

    def write_report_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["episode", "ate_m_per_s", "success"])
            for r in range(self.ate_per_episode.shape[0]):
                w.writerow([r, f"{self.ate_per_episode[r]:.6f}", int(self.success[r])])
            w.writerow(["mean", f"{self.ate_mean:.6f}", ""])
            w.writerow(["std", f"{self.ate_std:.6f}", ""])
            w.writerow(["fall_rate", f"{self.fall_rate:.4f}", ""])


def run_scenario(agent, scenario: EvalScenario, env_cfg: EnvConfig | None = None) -> EvalReport:
    """Run all repetitions of a scenario with the deterministic policy path."""
    reps = scenario.repetitions
    cfg = env_cfg or EnvConfig()
    from dataclasses import replace as _replace

    cfg = _replace(
        cfg,
        n_envs=reps,
        seed=scenario.seed,
        p_fault=0.0,
        terrain_kinds=(scenario.terrain_kind,),
        terrain_curriculum=False,
        fault_curriculum=False,
        episode_length_s=scenario.episode_length_s + 1.0,
    )
    env = QuadrupedVecEnv(cfg, auto_reset=False)
    env.terrain_levels[:] = scenario.terrain_level
    obs, _ = env.reset()
    history = np.zeros(
        (reps, agent.femnet.history_frames, agent.obs_dim), dtype=np.float32
    )
    history = history_push(history, obs)

    steps = scenario.steps
    times = np.arange(steps) * CONTROL_DT
    commanded = np.zeros((reps, steps, 3))
    actual = np.zeros((reps, steps, 3))
    contacts = np.zeros((reps, steps, 4), dtype=bool)
    f_true = np.zeros((reps, steps, 12))
    f_est = np.zeros((reps, steps, 12))
    base_pose = np.zeros((reps, steps, 7))
    fell = np.zeros(reps, dtype=bool)

    schedule = sorted(scenario.fault_schedule, key=lambda e: e[0])
    next_fault = 0
    for t in range(steps):
        now = t * CONTROL_DT
        while next_fault < len(schedule) and now >= schedule[next_fault][0] - 1e-9:
            spec = schedule[next_fault][1]
            for r in range(reps):
                env.set_fault(r, spec)
            next_fault += 1
        env.command[:] = scenario.command_at(now)

        hist_flat = history_flatten(history)
        action, fem_out = agent.act_inference(obs, hist_flat)
        commanded[:, t] = env.command
        f_true[:, t] = env.fault_matrix()
        f_est[:, t] = sigmoid(fem_out.f_logits)
        obs, _, _, done, info = env.step(action)
        actual[:, t] = info["v_body"]
        contacts[:, t] = env.state.foot_contact
        base_pose[:, t, :3] = env.state.base_position
        base_pose[:, t, 3:] = env.state.base_orientation
        fell |= info["falls"]
        env.done_flags[:] = False  # fixed-length scripted episode
        history = history_push(history, obs)

    ate_eps = np.array([ate(commanded[r], actual[r]) for r in range(reps)])
    return EvalReport(
        scenario=scenario,
        ate_per_episode=ate_eps,
        success=~fell,
        times=times,
        commanded=commanded,
        actual=actual,
        contacts=contacts,
        f_true=f_true,
        f_est=f_est,
        base_pose=base_pose,
    )


def fault_estimation_metrics(report: EvalReport) -> tuple[float, float]:
    """Per-joint thresholded accuracy (grace-windowed) and detection latency.

    Accuracy excludes a 0.5 s window after each ground-truth transition;
    latency is the first post-injection time the estimated probability at
    the true faulty joint strictly exceeds 0.5 (nan if never detected).
    """
    f_true = report.f_true
    f_est = report.f_est
    reps, steps, _ = f_true.shape
    grace = int(round(GRACE_WINDOW_S / CONTROL_DT))
    correct = 0
    counted = 0
    latencies = []
    for r in range(reps):
        transitions = np.nonzero(np.any(np.diff(f_true[r], axis=0) != 0, axis=1))[0] + 1
        mask = np.ones(steps, dtype=bool)
        for tr in transitions:
            mask[tr : tr + grace] = False
        pred = (f_est[r] > DETECTION_THRESHOLD).astype(float)
        correct += np.sum(pred[mask] == f_true[r][mask])
        counted += mask.sum() * f_true.shape[2]
        for tr in transitions:
            joints = np.nonzero(f_true[r, tr] > 0)[0]
            if joints.size == 0:
                continue
            j = joints[0]
            after = np.nonzero(f_est[r, tr:, j] > DETECTION_THRESHOLD)[0]
            latencies.append(after[0] * CONTROL_DT if after.size else np.nan)
    accuracy = correct / max(counted, 1)
    latency = float(np.nanmean(latencies)) if latencies else 0.0
    return float(accuracy), latency


class PointMassVecEnv:
    """2-D velocity-controlled point mass with the tracking reward only.

    Shares the command/observation plumbing shape so the PPO stack runs
    unchanged; the optimal policy is simply action = command.
    """

    OBS_DIM = 4  # [vx, vy, cmd_x, cmd_y]
    ACT_DIM = 2
    PRIV_DIM = OBS_DIM + 3 + 12

    def __init__(self, n_envs: int = 64, seed: int = 0,
                 episode_length_s: float = 4.0, max_speed: float = 2.0):
        self.n = n_envs
        self.obs_dim = self.OBS_DIM
        self.act_dim = self.ACT_DIM
        self.priv_dim = self.PRIV_DIM
        self.rng = np.random.default_rng(seed)
        self.max_speed = max_speed
        self.max_steps = int(round(episode_length_s / CONTROL_DT))
        self.vel = np.zeros((n_envs, 2))
        self.pos = np.zeros((n_envs, 2))
        self.command = np.zeros((n_envs, 2))
        self.episode_step = np.zeros(n_envs, dtype=int)
        self.terrain_levels = np.zeros(n_envs)

    def fault_matrix(self) -> np.ndarray:
        return np.zeros((self.n, 12))

    def v_label(self) -> np.ndarray:
        return np.concatenate([self.vel, np.zeros((self.n, 1))], axis=1)

    def _observe(self) -> np.ndarray:
        return np.concatenate([self.vel, self.command], axis=1)

    def _privileged(self, obs) -> np.ndarray:
        return np.concatenate([obs, self.v_label(), self.fault_matrix()], axis=1)

    def reset(self):
        self.reset_rows(np.arange(self.n))
        obs = self._observe()
        return obs, self._privileged(obs)

    def reset_rows(self, rows):
        if len(rows) == 0:
            return
        self.vel[rows] = 0.0
        self.pos[rows] = 0.0
        self.command[rows] = self.rng.uniform(-1.0, 1.0, (len(rows), 2))
        self.episode_step[rows] = 0

    def step(self, action):
        action = np.clip(np.asarray(action, dtype=float), -self.max_speed, self.max_speed)
        self.vel = action
        self.pos = self.pos + self.vel * CONTROL_DT
        self.episode_step += 1
        err = np.sum((self.command - self.vel) ** 2, axis=1)
        reward = np.exp(-err / 0.25)
        timeout = self.episode_step >= self.max_steps
        done = timeout.copy()
        info = {
            "time_outs": timeout,
            "falls": np.zeros(self.n, dtype=bool),
            "v_body": self.v_label(),
            "fault_matrix": self.fault_matrix(),
        }
        if done.any():
            self.reset_rows(np.nonzero(done)[0])
        obs = self._observe()
        return obs, self._privileged(obs), reward, done, info

    def evaluate_ate(self, agent, episodes: int = 8, seed: int = 123) -> float:
        """Deterministic-policy tracking error against fresh commands."""
        rng = np.random.default_rng(seed)
        from .femnet import history_flatten, history_push

        errs = []
        for _ in range(episodes):
            cmd = rng.uniform(-1.0, 1.0, (self.n, 2))
            vel = np.zeros((self.n, 2))
            history = np.zeros(
                (self.n, agent.femnet.history_frames, self.obs_dim), dtype=np.float32
            )
            for t in range(50):
                obs = np.concatenate([vel, cmd], axis=1)
                history = history_push(history, obs)
                action, _ = agent.act_inference(obs, history_flatten(history))
                vel = np.clip(action, -self.max_speed, self.max_speed)
                if t >= 5:  # settle-in
                    errs.append(np.linalg.norm(cmd - vel, axis=1))
        return float(np.mean(errs))


def pointmass_env(n_envs: int = 64, seed: int = 0) -> PointMassVecEnv:
    return PointMassVecEnv(n_envs=n_envs, seed=seed)
