from dataclasses import replace

import numpy as np
import pytest

from ftquad import faults, simcore
from ftquad.env import (
    CONTROL_DT,
    DECIMATION,
    OBS_DIM,
    PRIV_DIM,
    EnvConfig,
    QuadrupedVecEnv,
    build_observation,
    build_privileged,
)
from ftquad.simcore import RobotModel, initial_state

MODEL = RobotModel()


def small_env(**overrides) -> QuadrupedVecEnv:
    defaults = dict(n_envs=4, seed=0, terrain_kinds=("smooth",), p_fault=0.0,
                    episode_length_s=2.0, reset_q_noise=0.0)
    defaults.update(overrides)
    return QuadrupedVecEnv(EnvConfig(**defaults))


def force_fault(env, spec):
    for i in range(env.n):
        env.set_fault(i, spec)


class TestObservation:
    def test_length_45(self):
        state = initial_state(MODEL, 2)
        obs = build_observation(state, np.zeros((2, 3)), np.zeros((2, 12)))
        assert obs.shape == (2, OBS_DIM)
        assert OBS_DIM == 3 + 3 + 3 + 12 + 12 + 12

    def test_rest_observation_components(self):
        state = initial_state(MODEL, 1)
        obs = build_observation(state, np.zeros((1, 3)), np.zeros((1, 12)))[0]
        assert np.array_equal(obs[0:3], np.zeros(3))  # angular velocity
        assert np.allclose(obs[3:6], [0.0, 0.0, -1.0])  # projected gravity
        assert np.array_equal(obs[6:9], np.zeros(3))  # command
        assert np.allclose(obs[9:21], MODEL.q_def)  # joint angles
        assert np.array_equal(obs[21:33], np.zeros(12))  # joint rates
        assert np.array_equal(obs[33:45], np.zeros(12))  # previous action

    def test_noise_free_build_is_bit_identical(self):
        state = initial_state(MODEL, 3)
        a = build_observation(state, np.ones((3, 3)), np.ones((3, 12)))
        b = build_observation(state, np.ones((3, 3)), np.ones((3, 12)))
        assert np.array_equal(a, b)


class TestPrivileged:
    def test_length_is_component_sum(self):
        # o (45) + v (3) + f (12) + d (6) + heightmap (121)
        assert PRIV_DIM == 45 + 3 + 12 + 6 + 121
        state = initial_state(MODEL, 2)
        obs = build_observation(state, np.zeros((2, 3)), np.zeros((2, 12)))
        priv = build_privileged(obs, state, np.zeros((2, 12)),
                                np.zeros((2, 6)), np.zeros((2, 121)))
        assert priv.shape == (2, PRIV_DIM)

    def test_nominal_slots(self):
        env = small_env()
        obs, priv = env.reset()
        assert np.array_equal(priv[:, 48:60], np.zeros((4, 12)))  # no fault
        assert np.array_equal(priv[:, 60:66], np.zeros((4, 6)))  # no pushes
        h = priv[:, 66:]
        assert np.allclose(h, h[:, :1], atol=2e-3)  # flat tile, near-constant

    def test_fault_slot_matches_fault_vector(self):
        env = small_env()
        env.reset()
        spec = faults.FaultSpec(faulty=True, joint_index=5,
                                kind=faults.LOCKED, q_cen=-1.5)
        env.set_fault(2, spec)
        obs = env._observe()
        priv = env._privileged(obs)
        assert np.array_equal(priv[2, 48:60], faults.fault_vector(spec))
        assert np.array_equal(priv[0, 48:60], np.zeros(12))


class TestRewards:
    def test_total_equals_weighted_sum(self, rng):
        env = small_env(p_fault=0.5)
        env.reset()
        for _ in range(20):
            _, _, reward, _, info = env.step(rng.uniform(-1, 1, (4, 12)))
            terms = info["reward_terms"]
            expected = (terms.values @ terms.weights) * CONTROL_DT
            assert np.allclose(reward, expected, atol=1e-9)
            assert np.allclose(reward, terms.total, atol=1e-12)

    def test_perfect_tracking_reward_is_one(self):
        env = small_env()
        env.reset()
        env.command[:] = 0.0
        # standing still with zero command is perfect tracking once settled
        for _ in range(25):
            _, _, _, _, info = env.step(np.zeros((4, 12)))
        assert np.all(info["reward_terms"].term("track_lin") > 0.99)

    def test_faulty_terms_zero_without_fault(self, rng):
        env = small_env()
        env.reset()
        for _ in range(10):
            _, _, _, _, info = env.step(rng.uniform(-1, 1, (4, 12)))
            terms = info["reward_terms"]
            assert np.array_equal(terms.term("faulty_joint_motion"), np.zeros(4))
            assert np.array_equal(terms.term("faulty_contact"), np.zeros(4))

    def test_faulty_contact_weight(self):
        env = small_env()
        env.reset()
        spec = faults.FaultSpec(faulty=True, joint_index=5,
                                kind=faults.LOCKED, q_cen=MODEL.q_def[5])
        force_fault(env, spec)
        for _ in range(25):
            _, _, _, _, info = env.step(np.zeros((4, 12)))
        terms = info["reward_terms"]
        # standing on all feet: the faulty (FR) leg is loaded above threshold
        assert np.all(terms.term("faulty_contact") == 1.0)
        w = terms.weights[terms.names.index("faulty_contact")]
        assert w == -0.1

    def test_air_time_oracle_from_contacts(self, rng):
        env = small_env(episode_length_s=4.0)
        env.reset()
        contacts = []
        air = []
        for _ in range(60):
            env.step(rng.uniform(-0.6, 0.6, (4, 12)))
            contacts.append(env.state.foot_contact.copy())
            air.append(env.air_time.copy())
        contacts = np.array(contacts)
        air = np.array(air)
        # replay the bookkeeping rule directly from the contact flags
        expect = np.zeros((4, 4))
        for t in range(60):
            expect = np.where(contacts[t], 0.0, expect + CONTROL_DT)
            assert np.allclose(air[t], expect, atol=1e-12)


class TestStepSemantics:
    def test_timeout_at_exact_step_count(self):
        env = small_env(episode_length_s=1.0)
        env.reset()
        steps = int(round(1.0 / CONTROL_DT))
        for t in range(steps):
            _, _, _, done, info = env.step(np.zeros((4, 12)))
            if t < steps - 1:
                assert not done.any()
        assert done.all() and info["time_outs"].all()

    def test_twenty_second_default_is_1000_steps(self):
        assert EnvConfig().max_episode_steps == 1000

    def test_locked_joint_band_invariant(self, rng):
        env = small_env()
        env.reset()
        spec = faults.FaultSpec(faulty=True, joint_index=5,
                                kind=faults.LOCKED, q_cen=-1.5)
        for _ in range(50):
            force_fault(env, spec)  # reinstall after any auto-reset
            action = rng.uniform(-3, 3, (4, 12))
            q_des = env.model.q_def + env.cfg.action_scale * action
            q_des = np.clip(q_des, env.model.q_min, env.model.q_max)
            clipped = env._apply_locked_batch(q_des)
            assert np.all(clipped[:, 5] >= spec.q_cen - spec.q_thr - 1e-12)
            assert np.all(clipped[:, 5] <= spec.q_cen + spec.q_thr + 1e-12)
            env.step(action)

    def test_nonfinite_q_cen_locks_at_current_angle(self, rng):
        env = small_env()
        env.reset()
        for _ in range(10):
            env.step(rng.uniform(-1, 1, (4, 12)))
        q_now = env.state.q[:, 5].copy()
        spec = faults.FaultSpec(faulty=True, joint_index=5,
                                kind=faults.LOCKED, q_cen=float("nan"))
        for i in range(env.n):
            env.set_fault(i, spec)
        assert np.allclose(env.fault_q_cen, q_now)
        assert np.isfinite(env.fault_q_cen).all()

    def test_weakened_zero_torque_every_substep(self, rng):
        env = small_env()
        env.reset()
        spec = faults.FaultSpec(faulty=True, joint_index=7,
                                kind=faults.WEAKENED, k_tau=0.0)
        force_fault(env, spec)
        tau = env._apply_weakened_batch(rng.uniform(-20, 20, (4, 12)))
        assert np.array_equal(tau[:, 7], np.zeros(4))
        for _ in range(10):
            _, _, _, _, info = env.step(rng.uniform(-1, 1, (4, 12)))

    def test_stepping_done_env_without_reset_raises(self):
        env = QuadrupedVecEnv(
            EnvConfig(n_envs=2, seed=0, terrain_kinds=("smooth",),
                      p_fault=0.0, episode_length_s=0.1),
            auto_reset=False,
        )
        env.reset()
        for _ in range(5):
            env.step(np.zeros((2, 12)))
        with pytest.raises(RuntimeError, match="done environment"):
            env.step(np.zeros((2, 12)))


class TestReset:
    def test_p_fault_zero_never_faulty(self):
        env = small_env(episode_length_s=0.2)
        env.reset()
        for _ in range(40):  # span several auto-resets
            env.step(np.zeros((4, 12)))
            assert np.array_equal(env.fault_matrix(), np.zeros((4, 12)))

    def test_seeded_reset_is_deterministic(self):
        a = small_env(reset_q_noise=0.05)
        b = small_env(reset_q_noise=0.05)
        obs_a, priv_a = a.reset()
        obs_b, priv_b = b.reset()
        assert np.array_equal(obs_a, obs_b)
        assert np.array_equal(priv_a, priv_b)
        assert np.array_equal(a.command, b.command)

    def test_command_sampling_uniform_ks(self):
        env = QuadrupedVecEnv(EnvConfig(n_envs=3000, seed=5,
                                        terrain_kinds=("smooth",)))
        env.reset()
        lo, hi = env.cfg.command_ranges[0]
        x = np.sort((env.command[:, 0] - lo) / (hi - lo))
        n = x.size
        d = np.max(np.maximum(x - np.arange(n) / n, (np.arange(n) + 1) / n - x))
        # Kolmogorov-Smirnov critical value at the 1% level
        assert d < 1.628 / np.sqrt(n)

    def test_fault_sampling_covers_joints_and_kinds(self):
        env = QuadrupedVecEnv(EnvConfig(n_envs=600, seed=1,
                                        terrain_kinds=("smooth",), p_fault=1.0))
        env.reset()
        assert env.fault_active.all()
        assert set(np.unique(env.fault_joint)) == set(range(12))
        assert env.fault_locked.any() and (~env.fault_locked).any()


class TestVectorization:
    def test_decimation_and_rate(self):
        assert DECIMATION == 4
        assert np.isclose(CONTROL_DT, 0.02)
        assert np.isclose(simcore.DT * DECIMATION, CONTROL_DT)

    def test_step_matches_identical_twin(self, rng):
        # identical seeds, identical actions: lockstep equality
        a = small_env()
        b = small_env()
        a.reset()
        b.reset()
        for _ in range(20):
            act = rng.uniform(-1, 1, (4, 12))
            obs_a, priv_a, rew_a, done_a, _ = a.step(act)
            obs_b, priv_b, rew_b, done_b, _ = b.step(act)
            assert np.array_equal(obs_a, obs_b)
            assert np.array_equal(priv_a, priv_b)
            assert np.array_equal(rew_a, rew_b)
            assert np.array_equal(done_a, done_b)

    def test_mid_run_injection_touches_only_fault_config(self):
        env = small_env()
        env.reset()
        before = (env.state.copy(), env.command.copy(),
                  env.terrain_levels.copy(), env.episode_step.copy())
        env.set_fault(1, faults.FaultSpec(faulty=True, joint_index=3,
                                          kind=faults.WEAKENED, k_tau=0.0))
        assert np.array_equal(env.state.q, before[0].q)
        assert np.array_equal(env.state.base_position, before[0].base_position)
        assert np.array_equal(env.command, before[1])
        assert np.array_equal(env.terrain_levels, before[2])
        assert np.array_equal(env.episode_step, before[3])
        assert env.fault_matrix()[1, 3] == 1.0
        assert env.fault_matrix().sum() == 1.0
