"""Joint fault models: locked joints, weakened motors, and their curriculum.

A locked joint clips the desired joint angle into a narrow band around a
center angle; a weakened motor scales the applied torque by an efficiency
factor. One joint may be faulty at a time. Joint order matches simcore:
FL, FR, RL, RR x (hip, thigh, calf).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .simcore import JOINT_NAMES, N_JOINTS, RobotModel

LOCKED = "locked"
WEAKENED = "weakened"

Q_THR_DEFAULT = 0.05  # rad, half-width of the locked-joint band
K_TAU_UPPER = 0.25  # upper bound of the weakened-motor efficiency draw
DELTA_Q = 0.05  # rad, curriculum widening step for q_cen range
DELTA_K = 0.0125  # curriculum widening step for k_tau lower bound
P_FAULT_DEFAULT = 0.5


@dataclass(frozen=True)
class FaultSpec:
    """One robot's fault condition for an episode."""

    faulty: bool = False
    joint_index: int = 0
    kind: str = LOCKED
    q_cen: float = 0.0
    q_thr: float = Q_THR_DEFAULT
    k_tau: float = 1.0

    def __post_init__(self):
        if self.faulty:
            if not 0 <= self.joint_index < N_JOINTS:
                raise ValueError(f"joint_index {self.joint_index} out of range")
            if self.kind not in (LOCKED, WEAKENED):
                raise ValueError(f"unknown fault kind {self.kind!r}")
            if self.q_thr <= 0:
                raise ValueError("q_thr must be positive")
            if not 0.0 <= self.k_tau <= 1.0:
                raise ValueError("k_tau must lie in [0, 1]")

    @property
    def joint_name(self) -> str:
        return JOINT_NAMES[self.joint_index]


NO_FAULT = FaultSpec()


def apply_locked(q_des: np.ndarray, spec: FaultSpec) -> np.ndarray:
    """Clip the faulty joint's desired angle into [q_cen - q_thr, q_cen + q_thr]."""
    if not spec.faulty or spec.kind != LOCKED:
        return q_des
    out = np.array(q_des, dtype=float, copy=True)
    out[..., spec.joint_index] = np.clip(
        out[..., spec.joint_index], spec.q_cen - spec.q_thr, spec.q_cen + spec.q_thr
    )
    return out


def apply_weakened(torque: np.ndarray, spec: FaultSpec) -> np.ndarray:
    """Scale the faulty joint's torque by the efficiency factor k_tau."""
    if not spec.faulty or spec.kind != WEAKENED:
        return torque
    out = np.array(torque, dtype=float, copy=True)
    out[..., spec.joint_index] = spec.k_tau * out[..., spec.joint_index]
    return out


def fault_vector(spec: FaultSpec) -> np.ndarray:
    """Binary per-joint fault indicator; one-hot when faulty, zeros otherwise."""
    f = np.zeros(N_JOINTS)
    if spec.faulty:
        f[spec.joint_index] = 1.0
    return f


@dataclass
class FaultCurriculumState:
    """Sampling ranges for fault parameters, widened as training succeeds.

    Starts degenerate (q_cen pinned at the default joint angles, k_tau just
    below its upper bound) and widens by (delta_q, delta_k) whenever the
    episodic task reward clears the success threshold.
    """

    q_lower: np.ndarray  # (12,) per-joint lower bound of q_cen draws
    q_upper: np.ndarray  # (12,)
    k_lower: float
    r_thr: float
    delta_q: float = DELTA_Q
    delta_k: float = DELTA_K

    @staticmethod
    def initial(model: RobotModel, r_thr: float) -> "FaultCurriculumState":
        return FaultCurriculumState(
            q_lower=model.q_def.copy(),
            q_upper=model.q_def.copy(),
            k_lower=K_TAU_UPPER - DELTA_K,
            r_thr=r_thr,
        )


def curriculum_step(
    curr: FaultCurriculumState, episodic_task_reward: float, model: RobotModel
) -> FaultCurriculumState:
    """Widen the fault sampling ranges when the task reward clears r_thr."""
    if episodic_task_reward < curr.r_thr:
        return curr
    return replace(
        curr,
        q_lower=np.maximum(curr.q_lower - curr.delta_q, model.q_min),
        q_upper=np.minimum(curr.q_upper + curr.delta_q, model.q_max),
        k_lower=max(curr.k_lower - curr.delta_k, 0.0),
    )


def sample_fault(
    rng: np.random.Generator,
    curr: FaultCurriculumState,
    p_fault: float = P_FAULT_DEFAULT,
) -> FaultSpec:
    """Draw an episode fault: uniform joint and kind, curriculum-ranged params."""
    if not 0.0 <= p_fault <= 1.0:
        raise ValueError("p_fault must lie in [0, 1]")
    if rng.random() >= p_fault:
        return NO_FAULT
    joint = int(rng.integers(0, N_JOINTS))
    kind = LOCKED if rng.random() < 0.5 else WEAKENED
    q_cen = float(rng.uniform(curr.q_lower[joint], curr.q_upper[joint]))
    k_tau = float(rng.uniform(curr.k_lower, K_TAU_UPPER))
    return FaultSpec(
        faulty=True, joint_index=joint, kind=kind, q_cen=q_cen, k_tau=k_tau
    )


def spec_from_config(cfg: dict, model: RobotModel) -> FaultSpec:
    """Parse an evaluation fault description, e.g.

    {"joint": "FR_calf", "kind": "locked", "q_cen": "q_def"} or
    {"joint": "RR_calf", "kind": "weakened", "k_tau": 0.0}.
    """
    if not cfg:
        return NO_FAULT
    allowed = {"joint", "kind", "q_cen", "q_thr", "k_tau"}
    bad = set(cfg) - allowed
    if bad:
        raise ValueError(f"unknown fault keys: {sorted(bad)}")
    joint = cfg["joint"]
    if isinstance(joint, str):
        if joint not in JOINT_NAMES:
            raise ValueError(f"unknown joint name {joint!r}")
        joint = JOINT_NAMES.index(joint)
    kind = cfg.get("kind", LOCKED)
    q_cen = cfg.get("q_cen", "q_def")
    if q_cen == "q_def":
        q_cen = float(model.q_def[joint])
    elif q_cen == "current":
        # lock wherever the joint happens to be when the fault hits;
        # resolved against the live joint angle at installation time
        q_cen = float("nan")
    return FaultSpec(
        faulty=True,
        joint_index=int(joint),
        kind=kind,
        q_cen=float(q_cen),
        q_thr=float(cfg.get("q_thr", Q_THR_DEFAULT)),
        k_tau=float(cfg.get("k_tau", 0.0 if kind == WEAKENED else 1.0)),
    )
