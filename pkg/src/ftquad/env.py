"""POMDP locomotion environment: observation/privileged-state construction,
reward computation, fault and terrain hooks, episode logic.

Control runs at 50 Hz over a 200 Hz physics/PD loop (decimation 4). The
environment is vectorized: all per-env quantities are arrays with a leading
env dimension, and stepping k envs equals k independent sequential steppings
state-for-state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import faults, quat, simcore, terrain as terrain_mod
from .simcore import N_JOINTS, N_LEGS, ContactParams, PdGains, RobotModel, SimState

OBS_DIM = 45
# o (45) + v (3) + f (12) + d (6) + heightmap (121)
PRIV_DIM = 187
HEIGHTMAP_POINTS = 121
DISTURBANCE_DIM = 6
CONTROL_DT = 0.02  # 50 Hz
DECIMATION = 4

# fixed observation scales (sensor units -> network-friendly range)
ANG_VEL_SCALE = 0.25
QD_SCALE = 0.05
CMD_SCALE = np.array([2.0, 2.0, 0.25])


@dataclass
class RewardConfig:
    """Reward term weights. Table-style fault-tolerant terms keep their
    published weights; the base task/style set is a documented substitute
    (the lineage's base reward list is cited, not published)."""

    tracking_sigma_lin: float = 0.25
    tracking_sigma_ang: float = 0.25
    w_track_lin: float = 1.0
    w_track_ang: float = 0.5
    w_lin_vel_z: float = -2.0
    w_ang_vel_xy: float = -0.05
    w_orientation: float = -0.2
    w_torque: float = -2.0e-4
    w_action_rate: float = -0.01
    w_collision: float = -1.0
    w_feet_air_time: float = 1.5
    w_foot_clearance: float = -0.5
    w_raibert: float = -1.0e-5
    w_faulty_joint_motion: float = -0.2
    w_faulty_contact: float = -0.1
    desired_air_time: float = 0.5  # s
    desired_clearance: float = 0.09  # m above local terrain
    contact_force_threshold: float = 1.0  # N
    stance_duration: float = 0.25  # s, Raibert foothold heuristic

    def weights(self) -> dict:
        return {
            "track_lin": self.w_track_lin,
            "track_ang": self.w_track_ang,
            "lin_vel_z": self.w_lin_vel_z,
            "ang_vel_xy": self.w_ang_vel_xy,
            "orientation": self.w_orientation,
            "torque": self.w_torque,
            "action_rate": self.w_action_rate,
            "collision": self.w_collision,
            "feet_air_time": self.w_feet_air_time,
            "foot_clearance": self.w_foot_clearance,
            "raibert": self.w_raibert,
            "faulty_joint_motion": self.w_faulty_joint_motion,
            "faulty_contact": self.w_faulty_contact,
        }


@dataclass
class EnvConfig:
    n_envs: int = 256
    seed: int = 0
    terrain_kinds: tuple = ("smooth", "rough")
    terrain_curriculum: bool = True
    max_terrain_level: int = 9
    p_fault: float = faults.P_FAULT_DEFAULT
    episode_length_s: float = 20.0
    action_scale: float = 0.25
    action_clip: float = 100.0
    command_ranges: tuple = ((-1.0, 1.0), (-0.5, 0.5), (-1.0, 1.0))
    obs_noise_std: float = 0.0  # additive Gaussian on w, g, q, qd when > 0
    push_interval_s: float = 0.0  # 0 disables disturbance pushes
    push_force: float = 0.0
    reset_q_noise: float = 0.05
    fault_curriculum: bool = True
    r_thr_fraction: float = 0.8
    rewards: RewardConfig = field(default_factory=RewardConfig)

    @property
    def max_episode_steps(self) -> int:
        return int(round(self.episode_length_s / CONTROL_DT))


class TerrainStack:
    """Immutable stack of same-shape heightfield tiles; each env owns one
    tile index and lives in its tile's local frame."""

    def __init__(self, fields: list):
        self.fields = fields
        self.heights = np.stack([f.heights for f in fields])
        self.resolution = fields[0].resolution
        self.extent = fields[0].extent
        self.idx = np.zeros(0, dtype=int)  # set by the env per reset

    def height_at(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        _, ny, nx = self.heights.shape
        gx = np.clip((x + self.extent) / self.resolution, 0.0, nx - 1.000001)
        gy = np.clip((y + self.extent) / self.resolution, 0.0, ny - 1.000001)
        x0 = np.floor(gx).astype(int)
        y0 = np.floor(gy).astype(int)
        fx = gx - x0
        fy = gy - y0
        idx = self.idx.reshape(self.idx.shape + (1,) * (x.ndim - 1))
        h00 = self.heights[idx, y0, x0]
        h01 = self.heights[idx, y0, x0 + 1]
        h10 = self.heights[idx, y0 + 1, x0]
        h11 = self.heights[idx, y0 + 1, x0 + 1]
        return (
            h00 * (1 - fx) * (1 - fy)
            + h01 * fx * (1 - fy)
            + h10 * (1 - fx) * fy
            + h11 * fx * fy
        )


def build_observation(
    state: SimState,
    command: np.ndarray,
    prev_action: np.ndarray,
    noise_std: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """o_t = [w, g, c, q, q_dot, a_prev] with fixed scales, (n, 45)."""
    w = state.base_angular_velocity
    g = simcore.projected_gravity(state)
    q = state.q
    qd = state.q_dot
    if noise_std > 0.0 and rng is not None:
        w = w + rng.normal(0.0, noise_std, w.shape)
        g = g + rng.normal(0.0, noise_std, g.shape)
        q = q + rng.normal(0.0, noise_std, q.shape)
        qd = qd + rng.normal(0.0, noise_std * 2.0, qd.shape)
    return np.concatenate(
        [
            w * ANG_VEL_SCALE,
            g,
            np.atleast_2d(command) * CMD_SCALE,
            q,
            qd * QD_SCALE,
            np.atleast_2d(prev_action),
        ],
        axis=-1,
    )


def build_privileged(
    obs: np.ndarray,
    state: SimState,
    fault_matrix: np.ndarray,
    disturbance: np.ndarray,
    heightmap: np.ndarray,
) -> np.ndarray:
    """s_t = [o, v, f, d, h], (n, 230)."""
    v_body = state.linear_velocity_body()
    return np.concatenate(
        [obs, v_body, fault_matrix, disturbance, heightmap], axis=-1
    )


@dataclass
class RewardTerms:
    names: tuple
    values: np.ndarray  # (n, k) raw term values
    weights: np.ndarray  # (k,)
    dt: float

    @property
    def total(self) -> np.ndarray:
        return (self.values * self.weights).sum(axis=-1) * self.dt

    def term(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]


class QuadrupedVecEnv:
    """Vectorized fault-injected quadruped locomotion environment."""

    def __init__(
        self,
        cfg: EnvConfig,
        model: RobotModel | None = None,
        gains: PdGains | None = None,
        contact: ContactParams | None = None,
        auto_reset: bool = True,
    ):
        self.cfg = cfg
        self.model = model or RobotModel()
        self.gains = gains or PdGains()
        self.contact = contact or ContactParams()
        self.auto_reset = auto_reset
        self.n = cfg.n_envs
        self.rng = np.random.default_rng(cfg.seed)
        self.rewards = cfg.rewards

        fields = []
        self._tile_index = {}
        for kind in cfg.terrain_kinds:
            for level in range(cfg.max_terrain_level + 1):
                self._tile_index[(kind, level)] = len(fields)
                fields.append(terrain_mod.generate(kind, level, seed=cfg.seed))
        self.terrain = TerrainStack(fields)
        self.terrain.idx = np.zeros(self.n, dtype=int)

        self.max_task_reward = (
            (self.rewards.w_track_lin + self.rewards.w_track_ang)
            * CONTROL_DT
            * cfg.max_episode_steps
        )
        self.fault_curriculum = faults.FaultCurriculumState.initial(
            self.model, r_thr=cfg.r_thr_fraction * self.max_task_reward
        )
        self.terrain_levels = np.zeros(self.n, dtype=int)

        self.state = simcore.initial_state(self.model, self.n)
        self.command = np.zeros((self.n, 3))
        self.prev_action = np.zeros((self.n, N_JOINTS))
        self.prev_prev_action = np.zeros((self.n, N_JOINTS))
        self.episode_step = np.zeros(self.n, dtype=int)
        self.done_flags = np.zeros(self.n, dtype=bool)
        self.air_time = np.zeros((self.n, N_LEGS))
        self.episode_task_reward = np.zeros(self.n)
        self.episode_total_reward = np.zeros(self.n)
        self.start_xy = np.zeros((self.n, 2))
        self.disturbance = np.zeros((self.n, DISTURBANCE_DIM))
        self.push_timer = np.zeros(self.n)

        self.fault_active = np.zeros(self.n, dtype=bool)
        self.fault_joint = np.zeros(self.n, dtype=int)
        self.fault_locked = np.zeros(self.n, dtype=bool)
        self.fault_q_cen = np.zeros(self.n)
        self.fault_q_thr = np.full(self.n, faults.Q_THR_DEFAULT)
        self.fault_k_tau = np.ones(self.n)

        self.reset()

    # ----- fault plumbing -------------------------------------------------

    def fault_matrix(self) -> np.ndarray:
        f = np.zeros((self.n, N_JOINTS))
        rows = np.nonzero(self.fault_active)[0]
        f[rows, self.fault_joint[rows]] = 1.0
        return f

    def fault_spec(self, i: int) -> faults.FaultSpec:
        if not self.fault_active[i]:
            return faults.NO_FAULT
        return faults.FaultSpec(
            faulty=True,
            joint_index=int(self.fault_joint[i]),
            kind=faults.LOCKED if self.fault_locked[i] else faults.WEAKENED,
            q_cen=float(self.fault_q_cen[i]),
            q_thr=float(self.fault_q_thr[i]),
            k_tau=float(self.fault_k_tau[i]),
        )

    def set_fault(self, i: int, spec: faults.FaultSpec) -> None:
        """Install a fault mid-run (evaluation / live steering).

        A non-finite q_cen means "lock at the joint's current angle": a
        joint seizing mid-run stops wherever it happens to be.
        """
        self.fault_active[i] = spec.faulty
        if spec.faulty:
            q_cen = spec.q_cen
            if not np.isfinite(q_cen):
                q_cen = float(self.state.q[i, spec.joint_index])
            self.fault_joint[i] = spec.joint_index
            self.fault_locked[i] = spec.kind == faults.LOCKED
            self.fault_q_cen[i] = q_cen
            self.fault_q_thr[i] = spec.q_thr
            self.fault_k_tau[i] = spec.k_tau

    def _apply_locked_batch(self, q_des: np.ndarray) -> np.ndarray:
        rows = np.nonzero(self.fault_active & self.fault_locked)[0]
        if rows.size:
            j = self.fault_joint[rows]
            q_des[rows, j] = np.clip(
                q_des[rows, j],
                self.fault_q_cen[rows] - self.fault_q_thr[rows],
                self.fault_q_cen[rows] + self.fault_q_thr[rows],
            )
        return q_des

    def _apply_weakened_batch(self, tau: np.ndarray) -> np.ndarray:
        rows = np.nonzero(self.fault_active & ~self.fault_locked)[0]
        if rows.size:
            j = self.fault_joint[rows]
            tau[rows, j] = self.fault_k_tau[rows] * tau[rows, j]
        return tau

    # ----- episode logic --------------------------------------------------

    def _sample_commands(self, rows: np.ndarray) -> None:
        for axis, (lo, hi) in enumerate(self.cfg.command_ranges):
            self.command[rows, axis] = self.rng.uniform(lo, hi, rows.size)

    def _sample_faults(self, rows: np.ndarray) -> None:
        for i in rows:
            spec = faults.sample_fault(
                self.rng, self.fault_curriculum, self.cfg.p_fault
            )
            self.fault_active[i] = spec.faulty
            self.fault_joint[i] = spec.joint_index
            self.fault_locked[i] = spec.kind == faults.LOCKED
            self.fault_q_cen[i] = spec.q_cen
            self.fault_q_thr[i] = spec.q_thr
            self.fault_k_tau[i] = spec.k_tau

    def reset(self) -> tuple[np.ndarray, np.ndarray]:
        self.reset_rows(np.arange(self.n))
        obs = self._observe()
        return obs, self._privileged(obs)

    def reset_rows(self, rows: np.ndarray) -> None:
        if rows.size == 0:
            return
        for kind_choice, i in zip(
            self.rng.integers(0, len(self.cfg.terrain_kinds), rows.size), rows
        ):
            kind = self.cfg.terrain_kinds[kind_choice]
            level = int(self.terrain_levels[i])
            self.terrain.idx[i] = self._tile_index[(kind, level)]
        q = self.model.q_def + self.rng.uniform(
            -self.cfg.reset_q_noise, self.cfg.reset_q_noise, (rows.size, N_JOINTS)
        )
        feet = simcore.foot_positions_body(q, self.model)
        ground = self.terrain.height_at(
            np.zeros((self.n, 1)), np.zeros((self.n, 1))
        )[rows, 0]
        self.state.base_position[rows, :2] = 0.0
        self.state.base_position[rows, 2] = ground - feet[:, :, 2].min(axis=1) + 0.01
        self.state.base_orientation[rows] = quat.identity(rows.size)
        self.state.base_linear_velocity[rows] = 0.0
        self.state.base_angular_velocity[rows] = 0.0
        self.state.q[rows] = q
        self.state.q_dot[rows] = 0.0
        self.state.foot_contact[rows] = False
        self.state.contact_force[rows] = 0.0
        self.state.time[rows] = 0.0
        self.state.failed[rows] = False
        self.prev_action[rows] = 0.0
        self.prev_prev_action[rows] = 0.0
        self.episode_step[rows] = 0
        self.done_flags[rows] = False
        self.air_time[rows] = 0.0
        self.episode_task_reward[rows] = 0.0
        self.episode_total_reward[rows] = 0.0
        self.start_xy[rows] = self.state.base_position[rows, :2]
        self.disturbance[rows] = 0.0
        self.push_timer[rows] = 0.0
        self._sample_commands(rows)
        self._sample_faults(rows)

    def v_label(self) -> np.ndarray:
        """Ground-truth body linear velocity (estimator supervision target)."""
        return self.state.linear_velocity_body()

    def _observe(self) -> np.ndarray:
        return build_observation(
            self.state,
            self.command,
            self.prev_action,
            self.cfg.obs_noise_std,
            self.rng if self.cfg.obs_noise_std > 0 else None,
        )

    def _privileged(self, obs: np.ndarray) -> np.ndarray:
        hmap = terrain_mod.local_heightmap(
            self.terrain,
            self.state.base_position,
            quat.yaw(self.state.base_orientation),
        )
        return build_privileged(
            obs, self.state, self.fault_matrix(), self.disturbance, hmap
        )

    def step(self, action: np.ndarray):
        """One 50 Hz control step (4 physics substeps).

        Returns (obs, privileged, reward, done, info). Done envs auto-reset
        unless auto_reset is off, in which case stepping a done env raises.
        """
        if not self.auto_reset and self.done_flags.any():
            raise RuntimeError("stepping a done environment without reset")
        action = np.clip(
            np.asarray(action, dtype=float),
            -self.cfg.action_clip,
            self.cfg.action_clip,
        )
        q_des = self.model.q_def + self.cfg.action_scale * action
        q_des = np.clip(q_des, self.model.q_min, self.model.q_max)
        q_des = self._apply_locked_batch(q_des)

        if self.cfg.push_interval_s > 0:
            self.push_timer += CONTROL_DT
            pushing = self.push_timer >= self.cfg.push_interval_s
            if pushing.any():
                rows = np.nonzero(pushing)[0]
                self.disturbance[rows, :3] = self.rng.uniform(
                    -self.cfg.push_force, self.cfg.push_force, (rows.size, 3)
                )
                self.push_timer[rows] = 0.0
            decay = self.push_timer > 0.2  # pushes last 0.2 s
            self.disturbance[decay] = 0.0

        prev_state = self.state
        state = self.state
        ext_f = self.disturbance[:, :3] if self.cfg.push_interval_s > 0 else None
        ext_t = self.disturbance[:, 3:] if self.cfg.push_interval_s > 0 else None
        torques = np.zeros((self.n, N_JOINTS))
        for _ in range(DECIMATION):
            tau = simcore.pd_torque(
                q_des, state, self.gains, self.model.torque_limit
            )
            tau = self._apply_weakened_batch(tau)
            torques = tau
            state = simcore.step(
                state,
                tau,
                self.terrain,
                simcore.DT,
                self.model,
                self.contact,
                external_force=ext_f,
                external_torque=ext_t,
            )
        self.state = state
        self.episode_step += 1

        reward_terms = self.compute_rewards(state, prev_state, action, torques)
        reward = reward_terms.total
        self.episode_task_reward += (
            reward_terms.term("track_lin") * self.rewards.w_track_lin
            + reward_terms.term("track_ang") * self.rewards.w_track_ang
        ) * CONTROL_DT
        self.episode_total_reward += reward

        roll, pitch = quat.roll_pitch(state.base_orientation)
        base_ground = self.terrain.height_at(
            state.base_position[:, :1], state.base_position[:, 1:2]
        )[:, 0]
        base_hit = (
            state.base_position[:, 2] - base_ground
        ) < self.model.base_clearance
        fell = (
            (np.abs(roll) > 1.2) | (np.abs(pitch) > 1.2) | base_hit | state.failed
        )
        timeout = self.episode_step >= self.cfg.max_episode_steps
        done = fell | timeout

        self.prev_prev_action = self.prev_action
        self.prev_action = action.copy()

        info = {
            "time_outs": timeout & ~fell,
            "falls": fell,
            "reward_terms": reward_terms,
            "tracking": reward_terms.term("track_lin").copy(),
            "terrain_levels": self.terrain_levels.copy(),
            "fault_matrix": self.fault_matrix(),
            "v_body": state.linear_velocity_body(),
        }

        # keep the returned array independent: reset_rows clears done_flags
        # in place and must not erase the caller's episode boundaries
        self.done_flags = done.copy()
        if done.any():
            rows = np.nonzero(done)[0]
            self._episode_end(rows)
            if self.auto_reset:
                self.reset_rows(rows)

        obs = self._observe()
        priv = self._privileged(obs)
        return obs, priv, reward, done, info

    def _episode_end(self, rows: np.ndarray) -> None:
        ep_time = self.episode_step[rows] * CONTROL_DT
        if self.cfg.terrain_curriculum:
            dist = np.linalg.norm(
                self.state.base_position[rows, :2] - self.start_xy[rows], axis=1
            )
            cmd_speed = np.linalg.norm(self.command[rows, :2], axis=1)
            commanded = cmd_speed * np.maximum(ep_time, 1e-9)
            full_len = self.episode_step[rows] >= self.cfg.max_episode_steps
            frac = np.where(commanded > 0, dist / np.maximum(commanded, 1e-9), 0.0)
            promote = (frac > terrain_mod.PROMOTE_FRACTION) & full_len
            demote = frac < terrain_mod.DEMOTE_FRACTION
            lv = self.terrain_levels[rows]
            lv = np.where(promote, lv + 1, lv)
            lv = np.where(demote, lv - 1, lv)
            self.terrain_levels[rows] = np.clip(lv, 0, self.cfg.max_terrain_level)
        if self.cfg.fault_curriculum:
            for r in rows:
                self.fault_curriculum = faults.curriculum_step(
                    self.fault_curriculum,
                    float(self.episode_task_reward[r]),
                    self.model,
                )

    # ----- rewards ----------------------------------------------------------

    def compute_rewards(
        self,
        state: SimState,
        prev_state: SimState,
        action: np.ndarray,
        torques: np.ndarray,
    ) -> RewardTerms:
        rc = self.rewards
        v_body = state.linear_velocity_body()
        w = state.base_angular_velocity
        g = simcore.projected_gravity(state)

        err_lin = np.sum((self.command[:, :2] - v_body[:, :2]) ** 2, axis=1)
        track_lin = np.exp(-err_lin / rc.tracking_sigma_lin)
        err_ang = (self.command[:, 2] - w[:, 2]) ** 2
        track_ang = np.exp(-err_ang / rc.tracking_sigma_ang)

        lin_vel_z = state.base_linear_velocity[:, 2] ** 2
        ang_vel_xy = np.sum(w[:, :2] ** 2, axis=1)
        orientation = np.sum(g[:, :2] ** 2, axis=1)
        torque_pen = np.sum(torques ** 2, axis=1)
        action_rate = np.sum((action - self.prev_action) ** 2, axis=1)

        # knee ("calf link start") touching ground counts as a collision
        knees = self._knee_positions(state)
        knee_ground = self.terrain.height_at(knees[..., 0], knees[..., 1])
        collision = np.sum(knees[..., 2] - knee_ground < 0.02, axis=1).astype(float)

        faulty_leg = np.where(self.fault_active, self.fault_joint // 3, -1)
        leg_ids = np.arange(N_LEGS)
        normal_leg = leg_ids[None, :] != faulty_leg[:, None]  # (n, 4)

        contact = state.foot_contact
        was_air = self.air_time > 0.0
        first_contact = contact & was_air
        landing_air_time = self.air_time + CONTROL_DT
        cmd_moving = (
            np.linalg.norm(self.command[:, :2], axis=1) > 0.1
        ) | (np.abs(self.command[:, 2]) > 0.1)
        feet_air = (
            np.sum(
                (landing_air_time - rc.desired_air_time)
                * first_contact
                * normal_leg,
                axis=1,
            )
            * cmd_moving
        )
        self.air_time = np.where(contact, 0.0, self.air_time + CONTROL_DT)

        feet_w = simcore.foot_positions(state, self.model)
        foot_ground = self.terrain.height_at(feet_w[..., 0], feet_w[..., 1])
        foot_h = feet_w[..., 2] - foot_ground
        feet_prev = simcore.foot_positions(prev_state, self.model)
        foot_v_xy = np.linalg.norm(
            (feet_w[..., :2] - feet_prev[..., :2]) / CONTROL_DT, axis=-1
        )
        clearance = np.sum(
            (foot_h - rc.desired_clearance) ** 2 * foot_v_xy * normal_leg, axis=1
        )

        feet_body = simcore.foot_positions_body(state.q, self.model)
        des_xy = (
            self.model.hip_offsets[None, :, :2]
            + 0.5 * rc.stance_duration * self.command[:, None, :2]
        )
        raibert = np.sum(
            np.sum((feet_body[..., :2] - des_xy) ** 2, axis=-1) * normal_leg, axis=1
        )

        q_dev = (state.q - self.model.q_def) ** 2
        rows = np.arange(self.n)
        leg_slice = np.clip(faulty_leg, 0, None)
        leg_joint_dev = q_dev.reshape(self.n, N_LEGS, 3).sum(axis=2)
        faulty_joint_motion = np.where(
            self.fault_active, leg_joint_dev[rows, leg_slice], 0.0
        )
        faulty_contact = np.where(
            self.fault_active,
            (
                state.contact_force[rows, leg_slice]
                > rc.contact_force_threshold
            ).astype(float),
            0.0,
        )

        names = (
            "track_lin",
            "track_ang",
            "lin_vel_z",
            "ang_vel_xy",
            "orientation",
            "torque",
            "action_rate",
            "collision",
            "feet_air_time",
            "foot_clearance",
            "raibert",
            "faulty_joint_motion",
            "faulty_contact",
        )
        values = np.stack(
            [
                track_lin,
                track_ang,
                lin_vel_z,
                ang_vel_xy,
                orientation,
                torque_pen,
                action_rate,
                collision,
                feet_air,
                clearance,
                raibert,
                faulty_joint_motion,
                faulty_contact,
            ],
            axis=1,
        )
        wmap = rc.weights()
        weights = np.array([wmap[n] for n in names])
        return RewardTerms(names=names, values=values, weights=weights, dt=CONTROL_DT)

    def _knee_positions(self, state: SimState) -> np.ndarray:
        """World positions of the thigh-calf junctions, (n, 4, 3)."""
        ql = state.q.reshape(self.n, N_LEGS, 3)
        q1, q2 = ql[..., 0], ql[..., 1]
        l1 = self.model.hip_lateral * self.model.side_signs
        l2 = self.model.thigh_length
        xp = -l2 * np.sin(q2)
        zp = -l2 * np.cos(q2)
        s1, c1 = np.sin(q1), np.cos(q1)
        local = np.stack([xp, c1 * l1 - s1 * zp, s1 * l1 + c1 * zp], axis=-1)
        kb = local + self.model.hip_offsets
        return state.base_position[:, None, :] + quat.rotate(
            state.base_orientation[:, None, :], kb
        )
