"""Asymmetric actor-critic PPO with joint estimator-network updates.

The actor consumes [o_t, v, f, z~] where v/f/z~ come from the estimator at
inference time (optionally blended with ground truth early in training); the
critic consumes the raw privileged state. The estimator is optimized on the
same rollout minibatches with its own loss.
"""

from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import checkpoint, femnet as femnet_mod
from .femnet import Femnet, history_flatten, history_push, modulate, sigmoid
from .nn import (
    AdamState,
    DiagGaussian,
    Mlp,
    adam_step,
    clip_grads_by_global_norm,
    elu_grad,
    gaussian_entropy,
    gaussian_log_prob,
    gaussian_sample,
)

MODE_FULL = "full"
MODE_NO_MODULATION = "no_modulation"
MODE_ORACLE = "oracle"


@dataclass
class PpoConfig:
    clip: float = 0.2
    discount: float = 0.99
    gae_lambda: float = 0.95
    minibatches_per_epoch: int = 4
    lr: float = 1e-3
    epochs_per_update: int = 5
    horizon: int = 24
    n_envs: int = 256
    entropy_coef: float = 0.005
    value_coef: float = 1.0
    max_grad_norm: float = 1.0
    desired_kl: float = 0.01  # 0 disables the adaptive step-size schedule
    femnet_lr: float = 3e-4
    femnet_steps_per_update: int = 12
    femnet_minibatch: int = 512
    femnet_replay_size: int = 120000

    def __post_init__(self):
        if not 0.0 < self.discount < 1.0:
            raise ValueError("discount must lie in (0, 1)")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError("gae_lambda must lie in [0, 1]")
        if self.clip <= 0.0:
            raise ValueError("clip must be positive")
        if self.desired_kl < 0.0:
            raise ValueError("desired_kl must be non-negative")


class Agent:
    """Policy + value networks plus the estimator, as one checkpointable unit."""

    def __init__(
        self,
        obs_dim: int,
        act_dim: int,
        priv_dim: int,
        mode: str = MODE_FULL,
        seed: int = 0,
        dtype=np.float32,
    ):
        if mode not in (MODE_FULL, MODE_NO_MODULATION, MODE_ORACLE):
            raise ValueError(f"unknown agent mode {mode!r}")
        rng = np.random.default_rng(seed)
        self.mode = mode
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.priv_dim = priv_dim
        self.femnet = Femnet(rng=rng, dtype=dtype, obs_dim=obs_dim)
        self.actor_in_dim = obs_dim + 3 + 12 + self.femnet.latent_dim
        self.policy = Mlp(
            [self.actor_in_dim, 512, 256, 128, act_dim],
            rng=rng, dtype=dtype, out_gain=0.01,
        )
        self.log_std = np.zeros(act_dim, dtype=dtype)
        self.value = Mlp([priv_dim, 512, 256, 128, 1], rng=rng, dtype=dtype)

    # parameters updated by the policy-gradient optimizer
    def policy_parameters(self):
        params = self.policy.parameters() + [self.log_std]
        if self.mode != MODE_NO_MODULATION:
            params = params + self.femnet.modulation.parameters()
        return params

    def latent(self, fem_out, f_in):
        """Latent fed to the actor: modulated unless running the ablation."""
        if self.mode == MODE_NO_MODULATION:
            return fem_out.z
        return modulate(fem_out.z, f_in, self.femnet.modulation)

    def actor_input(self, obs, v_in, f_in, z_in):
        return np.concatenate([obs, v_in, f_in, z_in], axis=-1).astype(
            self.policy.dtype
        )

    def act_inference(self, obs, history_flat):
        """Deterministic action from proprioception only (deployment path)."""
        fem_out = self.femnet.encode(history_flat, sample=False)
        f_prob = sigmoid(fem_out.f_logits)
        z_in = self.latent(fem_out, f_prob)
        x = self.actor_input(obs, fem_out.v_hat, f_prob, z_in)
        return self.policy(x), fem_out

    def save(self, path, metadata: dict | None = None) -> None:
        f = self.femnet
        tensors = {}
        tensors.update(checkpoint.pack_mlp("policy", self.policy))
        tensors["policy/log_std"] = self.log_std
        tensors.update(checkpoint.pack_mlp("value", self.value))
        tensors.update(checkpoint.pack_mlp("femnet/trunk", f.trunk))
        tensors.update(checkpoint.pack_mlp("femnet/vel_head", f.vel_head))
        tensors.update(checkpoint.pack_mlp("femnet/fault_head", f.fault_head))
        tensors.update(checkpoint.pack_mlp("femnet/mu_head", f.mu_head))
        tensors.update(checkpoint.pack_mlp("femnet/log_sigma_head", f.log_sigma_head))
        tensors.update(checkpoint.pack_mlp("femnet/decoder", f.decoder))
        tensors.update(checkpoint.pack_mlp("femnet/modulation", f.modulation.net))
        meta = {
            "mode": self.mode,
            "obs_dim": self.obs_dim,
            "act_dim": self.act_dim,
            "priv_dim": self.priv_dim,
        }
        meta.update(metadata or {})
        checkpoint.save(path, tensors, meta)

    @staticmethod
    def load(path) -> tuple["Agent", dict]:
        tensors, meta = checkpoint.load(path)
        agent = Agent(
            obs_dim=int(meta["obs_dim"]),
            act_dim=int(meta["act_dim"]),
            priv_dim=int(meta["priv_dim"]),
            mode=meta.get("mode", MODE_FULL),
        )
        f = agent.femnet
        try:
            checkpoint.unpack_mlp("policy", tensors, agent.policy)
            agent.log_std = tensors["policy/log_std"].astype(agent.policy.dtype)
            checkpoint.unpack_mlp("value", tensors, agent.value)
            checkpoint.unpack_mlp("femnet/trunk", tensors, f.trunk)
            checkpoint.unpack_mlp("femnet/vel_head", tensors, f.vel_head)
            checkpoint.unpack_mlp("femnet/fault_head", tensors, f.fault_head)
            checkpoint.unpack_mlp("femnet/mu_head", tensors, f.mu_head)
            checkpoint.unpack_mlp("femnet/log_sigma_head", tensors, f.log_sigma_head)
            checkpoint.unpack_mlp("femnet/decoder", tensors, f.decoder)
            checkpoint.unpack_mlp("femnet/modulation", tensors, f.modulation.net)
        except (KeyError, ValueError) as e:
            manifest = sorted(tensors)
            raise ValueError(
                f"checkpoint schema mismatch: {e}; manifest tensors: {manifest}"
            ) from e
        return agent, meta


@dataclass
class RolloutBatch:
    """Time-major (horizon, n_envs, ...) trajectories."""

    obs: np.ndarray
    histories: np.ndarray
    privileged: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    rewards: np.ndarray
    values: np.ndarray
    dones: np.ndarray
    v_labels: np.ndarray
    f_labels: np.ndarray
    next_obs: np.ndarray
    next_obs_valid: np.ndarray
    means: np.ndarray
    v_in: np.ndarray
    f_in: np.ndarray
    z: np.ndarray
    commands: np.ndarray
    bootstrap_value: np.ndarray

    @property
    def horizon(self) -> int:
        return self.obs.shape[0]

    @property
    def n_envs(self) -> int:
        return self.obs.shape[1]


class RolloutRunner:
    """Keeps per-env observation histories and collects on-policy batches."""

    def __init__(self, env, agent: Agent, seed: int = 0):
        self.env = env
        self.agent = agent
        self.rng = np.random.default_rng(seed)
        self.obs, self.priv = env.reset()
        self.history = np.zeros(
            (env.n, agent.femnet.history_frames, agent.obs_dim), dtype=np.float32
        )
        self.history = history_push(self.history, self.obs)

    def collect(
        self, horizon: int, gt_mix: float = 0.0, discount: float = 0.99
    ) -> RolloutBatch:
        env, agent = self.env, self.agent
        n = env.n
        alloc = lambda *shape: np.zeros((horizon, n) + shape, dtype=np.float32)
        b_obs = alloc(agent.obs_dim)
        b_hist = alloc(agent.femnet.history_dim)
        b_priv = alloc(agent.priv_dim)
        b_act = alloc(agent.act_dim)
        b_logp = alloc()
        b_rew = alloc()
        b_val = alloc()
        b_done = np.zeros((horizon, n), dtype=bool)
        b_vlab = alloc(3)
        b_flab = alloc(12)
        b_next = alloc(agent.obs_dim)
        b_nvalid = np.zeros((horizon, n), dtype=bool)
        b_mean = alloc(agent.act_dim)
        b_vin = alloc(3)
        b_fin = alloc(12)
        b_z = alloc(agent.femnet.latent_dim)
        b_cmd = alloc(3)

        gamma_boot = None
        for t in range(horizon):
            hist_flat = history_flatten(self.history)
            fem_out = agent.femnet.encode(hist_flat, sample=False)
            v_bar = env.v_label().astype(np.float32)
            f_bar = env.fault_matrix().astype(np.float32)
            if agent.mode == MODE_ORACLE:
                v_in, f_in = v_bar, f_bar
            else:
                f_prob = sigmoid(fem_out.f_logits).astype(np.float32)
                v_in = gt_mix * v_bar + (1.0 - gt_mix) * fem_out.v_hat
                f_in = gt_mix * f_bar + (1.0 - gt_mix) * f_prob
            z_in = agent.latent(fem_out, f_in)
            x = agent.actor_input(self.obs, v_in, f_in, z_in)
            mean = agent.policy(x)
            dist = DiagGaussian(mean, np.broadcast_to(agent.log_std, mean.shape))
            action = gaussian_sample(dist, self.rng).astype(np.float32)
            logp = gaussian_log_prob(dist, action)
            value = agent.value(b_priv_in := self.priv.astype(np.float32))[:, 0]

            cmd = np.asarray(env.command, dtype=np.float32)
            obs_next, priv_next, reward, done, info = env.step(action)

            b_obs[t] = self.obs
            b_hist[t] = hist_flat
            b_priv[t] = b_priv_in
            b_act[t] = action
            b_logp[t] = logp
            b_val[t] = value
            b_done[t] = done
            b_vlab[t] = v_bar
            b_flab[t] = f_bar
            b_next[t] = obs_next
            b_nvalid[t] = ~done
            b_mean[t] = mean
            b_vin[t] = v_in
            b_fin[t] = f_in
            b_z[t] = fem_out.z
            b_cmd[t, :, : cmd.shape[1]] = cmd

            # bootstrap through time-limit terminations
            timeouts = info.get("time_outs")
            rew = np.asarray(reward, dtype=np.float32)
            if timeouts is not None and timeouts.any():
                rew = rew + discount * value * timeouts
            b_rew[t] = rew

            self.obs, self.priv = obs_next, priv_next
            if done.any():
                self.history[done] = 0.0
            self.history = history_push(self.history, self.obs)

        bootstrap = self.agent.value(self.priv.astype(np.float32))[:, 0]
        return RolloutBatch(
            obs=b_obs, histories=b_hist, privileged=b_priv, actions=b_act,
            log_probs=b_logp, rewards=b_rew, values=b_val, dones=b_done,
            v_labels=b_vlab, f_labels=b_flab, next_obs=b_next,
            next_obs_valid=b_nvalid, means=b_mean, v_in=b_vin, f_in=b_fin,
            z=b_z, commands=b_cmd, bootstrap_value=bootstrap,
        )


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    bootstrap_value: np.ndarray,
    discount: float = 0.99,
    gae_lambda: float = 0.95,
):
    """Generalized advantage estimation over time-major arrays.

    delta_t = r_t + discount * (1 - done_t) * V_{t+1} - V_t
    A_t = delta_t + discount * lambda * (1 - done_t) * A_{t+1}
    Returns (advantages, returns = A + V).
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones)
    if rewards.shape != values.shape or rewards.shape != dones.shape:
        raise ValueError("rewards/values/dones shape mismatch")
    horizon = rewards.shape[0]
    adv = np.zeros_like(rewards)
    next_value = np.asarray(bootstrap_value, dtype=np.float64)
    next_adv = np.zeros_like(next_value)
    for t in range(horizon - 1, -1, -1):
        not_done = 1.0 - dones[t]
        delta = rewards[t] + discount * not_done * next_value - values[t]
        next_adv = delta + discount * gae_lambda * not_done * next_adv
        adv[t] = next_adv
        next_value = values[t]
    return adv, adv + values


@dataclass
class UpdateStats:
    actor_loss: float = 0.0
    value_loss: float = 0.0
    femnet_loss: float = 0.0
    entropy: float = 0.0
    approx_kl: float = 0.0
    clip_fraction: float = 0.0


class PpoTrainer:
    def __init__(self, agent: Agent, cfg: PpoConfig, seed: int = 0,
                 train_femnet: bool = True):
        self.agent = agent
        self.cfg = cfg
        self.rng = np.random.default_rng(seed)
        self.train_femnet = train_femnet
        self.opt_policy = AdamState.for_params(agent.policy_parameters(), lr=cfg.lr)
        self.opt_value = AdamState.for_params(agent.value.parameters(), lr=cfg.lr)
        self.opt_femnet = AdamState.for_params(
            agent.femnet.encoder_parameters(), lr=cfg.femnet_lr
        )
        # Estimator replay: iid minibatches over recent rollouts; per-step
        # slices alone are too correlated for the rare-fault classes.
        self._replay = None
        self._replay_n = 0
        self._replay_pos = 0

    def update(self, batch: RolloutBatch) -> UpdateStats:
        cfg = self.cfg
        agent = self.agent
        adv, returns = compute_gae(
            batch.rewards, batch.values, batch.dones, batch.bootstrap_value,
            cfg.discount, cfg.gae_lambda,
        )
        flat = lambda a: a.reshape(-1, *a.shape[2:])
        obs = flat(batch.obs)
        hist = flat(batch.histories)
        priv = flat(batch.privileged)
        actions = flat(batch.actions)
        logp_old = flat(batch.log_probs)
        v_in = flat(batch.v_in)
        f_in = flat(batch.f_in)
        z = flat(batch.z)
        v_lab = flat(batch.v_labels)
        f_lab = flat(batch.f_labels)
        o_next = flat(batch.next_obs)
        n_valid = flat(batch.next_obs_valid)
        adv_f = adv.reshape(-1)
        ret_f = returns.reshape(-1)
        adv_f = (adv_f - adv_f.mean()) / (adv_f.std() + 1e-8)

        total = obs.shape[0]
        if not np.isfinite(adv_f).all():
            raise FloatingPointError("non-finite advantages; update aborted")
        stats = UpdateStats()
        count = 0
        for _ in range(cfg.epochs_per_update):
            order = self.rng.permutation(total)
            for mb in np.array_split(order, cfg.minibatches_per_epoch):
                s = self._minibatch_step(
                    obs[mb], hist[mb], priv[mb], actions[mb], logp_old[mb],
                    v_in[mb], f_in[mb], z[mb], adv_f[mb], ret_f[mb],
                )
                stats.actor_loss += s.actor_loss
                stats.value_loss += s.value_loss
                stats.entropy += s.entropy
                stats.approx_kl += s.approx_kl
                stats.clip_fraction += s.clip_fraction
                count += 1
        for k in vars(stats):
            setattr(stats, k, getattr(stats, k) / max(count, 1))
        self._adapt_lr(stats.approx_kl)
        if self.train_femnet:
            valid = np.nonzero(n_valid)[0]
            self._replay_push(
                hist[valid], v_lab[valid], f_lab[valid], o_next[valid]
            )
            stats.femnet_loss = self._femnet_replay_steps()
        return stats

    def _adapt_lr(self, approx_kl: float) -> None:
        """Step-size schedule keeping the update near the KL trust region."""
        kl_target = self.cfg.desired_kl
        if kl_target <= 0.0:
            return
        lr = self.opt_policy.lr
        if approx_kl > 2.0 * kl_target:
            lr = max(lr / 1.5, 1e-5)
        elif 0.0 <= approx_kl < 0.5 * kl_target:
            lr = min(lr * 1.5, 1e-2)
        self.opt_policy.lr = lr
        self.opt_value.lr = lr

    def _replay_push(self, hist, v_lab, f_lab, o_next) -> None:
        cap = self.cfg.femnet_replay_size
        if self._replay is None:
            self._replay = {
                "hist": np.zeros((cap, hist.shape[1]), np.float32),
                "v": np.zeros((cap, v_lab.shape[1]), np.float32),
                "f": np.zeros((cap, f_lab.shape[1]), np.float32),
                "o": np.zeros((cap, o_next.shape[1]), np.float32),
            }
        n = hist.shape[0]
        for start in range(0, n, cap):
            chunk = slice(start, min(start + cap, n))
            m = chunk.stop - chunk.start
            idx = (self._replay_pos + np.arange(m)) % cap
            self._replay["hist"][idx] = hist[chunk]
            self._replay["v"][idx] = v_lab[chunk]
            self._replay["f"][idx] = f_lab[chunk]
            self._replay["o"][idx] = o_next[chunk]
            self._replay_pos = int((self._replay_pos + m) % cap)
            self._replay_n = min(self._replay_n + m, cap)

    def _femnet_replay_steps(self) -> float:
        cfg = self.cfg
        agent = self.agent
        if self._replay_n < 2:
            return 0.0
        losses = []
        faulty = np.nonzero(
            self._replay["f"][: self._replay_n].sum(axis=1) > 0.0
        )[0]
        half = cfg.femnet_minibatch // 2
        for _ in range(cfg.femnet_steps_per_update):
            # faulty rows are a small minority of each rollout; give them
            # half of every minibatch so rare fault classes keep gradient
            idx = self.rng.integers(0, self._replay_n, cfg.femnet_minibatch)
            if faulty.size > 0:
                idx[:half] = faulty[self.rng.integers(0, faulty.size, half)]
            loss, _, grads = agent.femnet.loss_and_grads(
                self._replay["hist"][idx],
                self._replay["v"][idx],
                self._replay["f"][idx],
                self._replay["o"][idx],
                self.rng,
            )
            clip_grads_by_global_norm(grads, cfg.max_grad_norm)
            adam_step(agent.femnet.encoder_parameters(), grads, self.opt_femnet)
            losses.append(loss)
        return float(np.mean(losses))

    def _minibatch_step(
        self, obs, hist, priv, actions, logp_old, v_in, f_in, z, adv, ret,
    ) -> UpdateStats:
        cfg = self.cfg
        agent = self.agent
        b = obs.shape[0]
        use_mod = agent.mode != MODE_NO_MODULATION

        if use_mod:
            g_out, g_cache = agent.femnet.modulation.net.forward(f_in)
            ld = agent.femnet.latent_dim
            g1 = g_out[:, :ld] + 1.0
            g2 = g_out[:, ld:]
            z_in = g1 * z + g2
        else:
            z_in = z
        x = agent.actor_input(obs, v_in, f_in, z_in)
        mean, p_cache = agent.policy.forward(x)
        log_std = np.broadcast_to(agent.log_std, mean.shape)
        dist = DiagGaussian(mean, log_std)
        logp = gaussian_log_prob(dist, actions)
        ratio = np.exp(np.clip(logp - logp_old, -20.0, 20.0))
        u1 = ratio * adv
        u2 = np.clip(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * adv
        surrogate = np.minimum(u1, u2)
        entropy = gaussian_entropy(dist)
        actor_loss = -surrogate.mean() - cfg.entropy_coef * entropy.mean()
        if not np.isfinite(actor_loss):
            raise FloatingPointError("non-finite actor loss; update aborted")

        # gradient of the surrogate flows only where the unclipped branch wins
        active = (u1 <= u2).astype(mean.dtype)
        dlogp = -(active * ratio * adv) / b
        std = dist.std
        zscore = (actions - mean) / std
        dmean = dlogp[:, None] * (zscore / std)
        dlogstd_per = dlogp[:, None] * (zscore * zscore - 1.0)
        dlogstd = dlogstd_per.sum(axis=0) - cfg.entropy_coef * np.ones_like(
            agent.log_std
        )
        g_policy, dx = agent.policy.backward(p_cache, dmean)
        grads = g_policy + [dlogstd]
        if use_mod:
            dz_tilde = dx[:, -agent.femnet.latent_dim:]
            dg1 = dz_tilde * z
            dg2 = dz_tilde
            g_mod, _ = agent.femnet.modulation.net.backward(
                g_cache, np.concatenate([dg1, dg2], axis=-1)
            )
            grads = grads + g_mod
        clip_grads_by_global_norm(grads, cfg.max_grad_norm)
        adam_step(agent.policy_parameters(), grads, self.opt_policy)

        values, v_cache = agent.value.forward(priv)
        values = values[:, 0]
        v_err = values - ret
        value_loss = cfg.value_coef * float(np.mean(v_err ** 2))
        dv = (cfg.value_coef * 2.0 * v_err / b)[:, None]
        g_value, _ = agent.value.backward(v_cache, dv)
        clip_grads_by_global_norm(g_value, cfg.max_grad_norm)
        adam_step(agent.value.parameters(), g_value, self.opt_value)

        return UpdateStats(
            actor_loss=float(actor_loss),
            value_loss=float(value_loss),
            entropy=float(entropy.mean()),
            approx_kl=float(np.mean(logp_old - logp)),
            clip_fraction=float(np.mean(np.abs(ratio - 1.0) > cfg.clip)),
        )


METRICS_FIELDS = (
    "iteration",
    "mean_tracking_reward",
    "mean_terrain_level",
    "mean_total_reward",
    "actor_loss",
    "value_loss",
    "femnet_loss",
    "entropy",
    "approx_kl",
    "clip_fraction",
    "fault_accuracy",
)


def train(
    env,
    agent: Agent,
    cfg: PpoConfig,
    iterations: int,
    out_dir: str | None = None,
    seed: int = 0,
    gt_mix_iters: int | None = None,
    checkpoint_every: int = 100,
    log=None,
):
    """Main training loop: collect, GAE, PPO + estimator update, curricula.

    Ground-truth v/f fed to the actor anneal linearly from 100% to 0% over
    gt_mix_iters (default: the first third of training). Returns the metrics
    history as a list of dicts; writes metrics.csv and checkpoints when
    out_dir is given.
    """
    runner = RolloutRunner(env, agent, seed=seed)
    trainer = PpoTrainer(agent, cfg, seed=seed)
    if gt_mix_iters is None:
        gt_mix_iters = max(1, iterations // 3)
    history = []
    writer = None
    csv_file = None
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        csv_file = open(os.path.join(out_dir, "metrics.csv"), "w", newline="")
        writer = csv.DictWriter(csv_file, fieldnames=METRICS_FIELDS)
        writer.writeheader()
    try:
        for it in range(iterations):
            if agent.mode == MODE_ORACLE:
                gt_mix = 1.0
            else:
                gt_mix = max(0.0, 1.0 - it / gt_mix_iters)
            batch = runner.collect(
                cfg.horizon, gt_mix=gt_mix, discount=cfg.discount
            )
            stats = trainer.update(batch)

            track = track_lin_reward(batch)
            fault_acc = fault_estimation_accuracy(agent, batch)
            row = {
                "iteration": it,
                "mean_tracking_reward": track,
                "mean_terrain_level": float(np.mean(getattr(
                    env, "terrain_levels", np.zeros(1)))),
                "mean_total_reward": float(batch.rewards.mean()),
                "actor_loss": stats.actor_loss,
                "value_loss": stats.value_loss,
                "femnet_loss": stats.femnet_loss,
                "entropy": stats.entropy,
                "approx_kl": stats.approx_kl,
                "clip_fraction": stats.clip_fraction,
                "fault_accuracy": fault_acc,
            }
            history.append(row)
            if writer:
                writer.writerow(row)
                csv_file.flush()
            if log and (it % 10 == 0 or it == iterations - 1):
                log(
                    f"iter {it:4d} track {track:.3f} total "
                    f"{row['mean_total_reward']:.4f} terr "
                    f"{row['mean_terrain_level']:.2f} facc {fault_acc:.3f}"
                )
            if out_dir and (
                (it + 1) % checkpoint_every == 0 or it == iterations - 1
            ):
                agent.save(
                    os.path.join(out_dir, "checkpoint.ftq"),
                    metadata={"iteration": it},
                )
    finally:
        if csv_file:
            csv_file.close()
    return history


def track_lin_reward(batch: RolloutBatch) -> float:
    """Mean linear-velocity tracking reward from the recorded ground truth."""
    err = np.sum(
        (batch.commands[..., :2] - batch.v_labels[..., :2]) ** 2, axis=-1
    )
    return float(np.mean(np.exp(-err / 0.25)))


def fault_estimation_accuracy(agent: Agent, batch: RolloutBatch) -> float:
    flat_hist = batch.histories.reshape(-1, batch.histories.shape[-1])
    sample = flat_hist[:: max(1, flat_hist.shape[0] // 512)]
    labels = batch.f_labels.reshape(-1, 12)[:: max(1, flat_hist.shape[0] // 512)]
    out = agent.femnet.encode(sample, sample=False)
    pred = femnet_mod.fault_binarize(out.f_logits)
    return float(np.mean(pred == labels))
