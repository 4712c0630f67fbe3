"""Rigid-body simulation of a 12-joint quadruped.

Floating base with kinematic 3-DoF legs (hip roll, thigh pitch, calf pitch).
Legs are treated as massless chains with per-joint effective inertia; ground
reaction enters through spring-damper point contacts at the feet with
Coulomb-capped tangential friction. Integration is semi-implicit Euler at
200 Hz, matching the joint-level PD rate.

Joint index order: FL, FR, RL, RR x (hip, thigh, calf).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import quat

LEG_NAMES = ("FL", "FR", "RL", "RR")
JOINT_NAMES = tuple(
    f"{leg}_{j}" for leg in LEG_NAMES for j in ("hip", "thigh", "calf")
)
N_JOINTS = 12
N_LEGS = 4
DT = 1.0 / 200.0


@dataclass
class PdGains:
    """Joint PD gains; defaults match the deployed controller rates."""

    kp: float = 28.5
    kd: float = 0.72

    def __post_init__(self):
        if not (self.kp > 0.0 and self.kd >= 0.0):
            raise ValueError(f"invalid PD gains kp={self.kp} kd={self.kd}")


@dataclass
class RobotModel:
    """Go1-like geometry and limits.

    The real platform's physical parameters are not public in the detail a
    full articulated model would need; these are nominal values chosen to
    match the published envelope (0.38 m body, 0.2 m links, ~12 kg).
    """

    base_mass: float = 12.0
    base_inertia: np.ndarray = field(
        default_factory=lambda: np.array([0.10, 0.25, 0.30])
    )  # diagonal, kg m^2
    body_length: float = 0.38
    body_width: float = 0.10
    hip_lateral: float = 0.08  # abduction link length, m
    thigh_length: float = 0.20
    calf_length: float = 0.20
    joint_inertia: float = 0.05  # effective reflected inertia per joint
    joint_damping: float = 0.02
    torque_limit: float = 23.7
    max_joint_speed: float = 30.0
    base_clearance: float = 0.10  # base "hits ground" below this height gap
    q_def: np.ndarray = field(
        default_factory=lambda: np.tile(np.array([0.0, 0.8, -1.5]), 4)
    )
    q_min: np.ndarray = field(
        default_factory=lambda: np.tile(np.array([-0.8, -1.0, -2.7]), 4)
    )
    q_max: np.ndarray = field(
        default_factory=lambda: np.tile(np.array([0.8, 2.8, -0.9]), 4)
    )

    def __post_init__(self):
        self.base_inertia = np.asarray(self.base_inertia, dtype=float)
        self.q_def = np.asarray(self.q_def, dtype=float)
        self.q_min = np.asarray(self.q_min, dtype=float)
        self.q_max = np.asarray(self.q_max, dtype=float)
        if self.base_mass <= 0 or np.any(self.base_inertia <= 0):
            raise ValueError("mass and inertia must be positive")
        if not np.all((self.q_min < self.q_def) & (self.q_def < self.q_max)):
            raise ValueError("q_def must lie strictly inside joint limits")

    @property
    def hip_offsets(self) -> np.ndarray:
        """Hip attachment points in the body frame, (4, 3)."""
        hx = self.body_length / 2.0
        hy = self.body_width / 2.0
        return np.array(
            [
                [hx, hy, 0.0],
                [hx, -hy, 0.0],
                [-hx, hy, 0.0],
                [-hx, -hy, 0.0],
            ]
        )

    @property
    def side_signs(self) -> np.ndarray:
        """+1 for left legs, -1 for right legs."""
        return np.array([1.0, -1.0, 1.0, -1.0])


@dataclass
class ContactParams:
    k_normal: float = 5000.0  # N/m
    d_normal: float = 100.0  # N s/m
    d_tangent: float = 100.0  # N s/m (viscous, Coulomb-capped)
    friction: float = 1.0
    gravity: float = 9.81


@dataclass
class SimState:
    """Batched ground-truth world state; leading dimension is the env count."""

    base_position: np.ndarray  # (n, 3) world, m
    base_orientation: np.ndarray  # (n, 4) unit quaternion (w, x, y, z)
    base_linear_velocity: np.ndarray  # (n, 3) world frame, m/s
    base_angular_velocity: np.ndarray  # (n, 3) body frame, rad/s
    q: np.ndarray  # (n, 12) rad
    q_dot: np.ndarray  # (n, 12) rad/s
    foot_contact: np.ndarray  # (n, 4) bool
    contact_force: np.ndarray  # (n, 4) normal force magnitude, N
    time: np.ndarray  # (n,) s
    failed: np.ndarray  # (n,) bool: non-finite escape

    @property
    def n(self) -> int:
        return self.base_position.shape[0]

    def linear_velocity_body(self) -> np.ndarray:
        """v_t expressed in the body frame (as sensed on the robot)."""
        return quat.rotate_inverse(self.base_orientation, self.base_linear_velocity)

    def copy(self) -> "SimState":
        return SimState(
            self.base_position.copy(),
            self.base_orientation.copy(),
            self.base_linear_velocity.copy(),
            self.base_angular_velocity.copy(),
            self.q.copy(),
            self.q_dot.copy(),
            self.foot_contact.copy(),
            self.contact_force.copy(),
            self.time.copy(),
            self.failed.copy(),
        )

    def select(self, idx) -> "SimState":
        return SimState(
            self.base_position[idx],
            self.base_orientation[idx],
            self.base_linear_velocity[idx],
            self.base_angular_velocity[idx],
            self.q[idx],
            self.q_dot[idx],
            self.foot_contact[idx],
            self.contact_force[idx],
            self.time[idx],
            self.failed[idx],
        )


def initial_state(model: RobotModel, n: int = 1, base_height: float | None = None) -> SimState:
    """Robots at the default standing pose, feet just touching z = 0 ground."""
    q = np.tile(model.q_def, (n, 1))
    if base_height is None:
        feet = foot_positions_body(q[:1], model)
        base_height = -float(feet[0, :, 2].min())
    pos = np.zeros((n, 3))
    pos[:, 2] = base_height
    return SimState(
        base_position=pos,
        base_orientation=quat.identity(n),
        base_linear_velocity=np.zeros((n, 3)),
        base_angular_velocity=np.zeros((n, 3)),
        q=q,
        q_dot=np.zeros((n, N_JOINTS)),
        foot_contact=np.zeros((n, N_LEGS), dtype=bool),
        contact_force=np.zeros((n, N_LEGS)),
        time=np.zeros(n),
        failed=np.zeros(n, dtype=bool),
    )


def pd_torque(q_des: np.ndarray, state: SimState, gains: PdGains,
              torque_limit: float = 23.7) -> np.ndarray:
    """Joint torques tau = kp (q_des - q) - kd q_dot, clamped per joint."""
    q_des = np.asarray(q_des, dtype=float)
    if not (np.all(np.isfinite(q_des)) and np.all(np.isfinite(state.q))
            and np.all(np.isfinite(state.q_dot))):
        raise ValueError("pd_torque: non-finite input")
    tau = gains.kp * (q_des - state.q) - gains.kd * state.q_dot
    return np.clip(tau, -torque_limit, torque_limit)


def foot_positions_body(q: np.ndarray, model: RobotModel) -> np.ndarray:
    """Body-frame foot positions, (n, 4, 3), legs ordered FL, FR, RL, RR."""
    q = np.asarray(q, dtype=float)
    ql = q.reshape(q.shape[0], N_LEGS, 3)
    q1, q2, q3 = ql[..., 0], ql[..., 1], ql[..., 2]
    l1 = model.hip_lateral * model.side_signs  # (4,)
    l2, l3 = model.thigh_length, model.calf_length
    s2, c2 = np.sin(q2), np.cos(q2)
    s23, c23 = np.sin(q2 + q3), np.cos(q2 + q3)
    xp = -l2 * s2 - l3 * s23
    zp = -l2 * c2 - l3 * c23
    s1, c1 = np.sin(q1), np.cos(q1)
    y = c1 * l1 - s1 * zp
    z = s1 * l1 + c1 * zp
    local = np.stack([xp, y, z], axis=-1)
    return local + model.hip_offsets


def foot_jacobians_body(q: np.ndarray, model: RobotModel) -> np.ndarray:
    """d(body-frame foot position)/d(leg joints), (n, 4, 3, 3)."""
    q = np.asarray(q, dtype=float)
    ql = q.reshape(q.shape[0], N_LEGS, 3)
    q1, q2, q3 = ql[..., 0], ql[..., 1], ql[..., 2]
    l1 = model.hip_lateral * model.side_signs
    l2, l3 = model.thigh_length, model.calf_length
    s2, c2 = np.sin(q2), np.cos(q2)
    s23, c23 = np.sin(q2 + q3), np.cos(q2 + q3)
    xp = -l2 * s2 - l3 * s23
    zp = -l2 * c2 - l3 * c23
    s1, c1 = np.sin(q1), np.cos(q1)
    zero = np.zeros_like(q1)
    # columns: d/dq1, d/dq2, d/dq3 of (x, y, z)
    col1 = np.stack([zero, -s1 * l1 - c1 * zp, c1 * l1 - s1 * zp], axis=-1)
    col2 = np.stack([zp, s1 * xp, -c1 * xp], axis=-1)
    dxp3 = -l3 * c23
    dzp3 = l3 * s23
    col3 = np.stack([dxp3, -s1 * dzp3, c1 * dzp3], axis=-1)
    return np.stack([col1, col2, col3], axis=-1)  # (n, 4, 3, 3)


def foot_positions(state: SimState, model: RobotModel) -> np.ndarray:
    """World-frame foot positions, (n, 4, 3)."""
    pb = foot_positions_body(state.q, model)
    return state.base_position[:, None, :] + quat.rotate(
        state.base_orientation[:, None, :], pb
    )


def projected_gravity(state: SimState) -> np.ndarray:
    """World down-direction (0, 0, -1) expressed in the body frame; unit norm."""
    down = np.broadcast_to(np.array([0.0, 0.0, -1.0]), state.base_position.shape)
    return quat.rotate_inverse(state.base_orientation, down)


def step(
    state: SimState,
    torque: np.ndarray,
    terrain,
    dt: float = DT,
    model: RobotModel | None = None,
    contact: ContactParams | None = None,
    external_force: np.ndarray | None = None,
    external_torque: np.ndarray | None = None,
) -> SimState:
    """Advance the world by one semi-implicit Euler step.

    `terrain` must expose height_at(x, y) -> z (vectorized). Identical inputs
    produce bit-identical outputs. External force/torque (world / body frame)
    model disturbance pushes on the base.
    """
    if model is None:
        model = RobotModel()
    if contact is None:
        contact = ContactParams()
    n = state.n
    torque = np.clip(
        np.asarray(torque, dtype=float), -model.torque_limit, model.torque_limit
    )

    pb = foot_positions_body(state.q, model)  # (n,4,3)
    R = state.base_orientation
    pw = state.base_position[:, None, :] + quat.rotate(R[:, None, :], pb)
    jac = foot_jacobians_body(state.q, model)  # (n,4,3,3)
    qd_leg = state.q_dot.reshape(n, N_LEGS, 3)
    # body-frame foot velocity relative to base + rigid-body transport
    v_rel = np.einsum("nlij,nlj->nli", jac, qd_leg)
    v_foot_body = np.cross(state.base_angular_velocity[:, None, :], pb) + v_rel
    v_foot = state.base_linear_velocity[:, None, :] + quat.rotate(
        R[:, None, :], v_foot_body
    )

    ground = terrain.height_at(pw[..., 0], pw[..., 1])
    pen = ground - pw[..., 2]
    in_contact = pen > 0.0
    fn = np.where(
        in_contact,
        np.maximum(0.0, contact.k_normal * pen - contact.d_normal * v_foot[..., 2]),
        0.0,
    )
    vt = v_foot[..., :2]
    ft = -contact.d_tangent * vt * in_contact[..., None]
    ft_norm = np.linalg.norm(ft, axis=-1)
    cap = contact.friction * fn
    scale = np.where(ft_norm > cap, cap / np.where(ft_norm > 0, ft_norm, 1.0), 1.0)
    ft = ft * scale[..., None]
    f_world = np.concatenate([ft, fn[..., None]], axis=-1)  # (n,4,3)

    # base dynamics
    f_total = f_world.sum(axis=1)
    f_total[:, 2] -= model.base_mass * contact.gravity
    if external_force is not None:
        f_total = f_total + external_force
    f_body = quat.rotate_inverse(R[:, None, :], f_world)
    t_body = np.cross(pb, f_body).sum(axis=1)
    if external_torque is not None:
        t_body = t_body + external_torque
    inertia = model.base_inertia
    w = state.base_angular_velocity
    w_dot = (t_body - np.cross(w, inertia * w)) / inertia
    v_new = state.base_linear_velocity + dt * f_total / model.base_mass
    w_new = w + dt * w_dot

    # joint dynamics: effective inertia + contact reaction through J^T
    tau_contact = np.einsum("nlij,nli->nlj", jac, f_body).reshape(n, N_JOINTS)
    qdd = (
        torque + tau_contact - model.joint_damping * state.q_dot
    ) / model.joint_inertia
    qd_new = np.clip(
        state.q_dot + dt * qdd, -model.max_joint_speed, model.max_joint_speed
    )

    pos_new = state.base_position + dt * v_new
    quat_new = quat.integrate(R, w_new, dt)
    q_new = state.q + dt * qd_new
    below = q_new < model.q_min
    above = q_new > model.q_max
    q_new = np.clip(q_new, model.q_min, model.q_max)
    qd_new = np.where(below | above, 0.0, qd_new)

    finite = (
        np.all(np.isfinite(pos_new), axis=1)
        & np.all(np.isfinite(quat_new), axis=1)
        & np.all(np.isfinite(v_new), axis=1)
        & np.all(np.isfinite(w_new), axis=1)
        & np.all(np.isfinite(q_new), axis=1)
        & np.all(np.isfinite(qd_new), axis=1)
    )
    failed = state.failed | ~finite

    return SimState(
        base_position=pos_new,
        base_orientation=quat_new,
        base_linear_velocity=v_new,
        base_angular_velocity=w_new,
        q=q_new,
        q_dot=qd_new,
        foot_contact=fn > 0.0,
        contact_force=fn,
        time=state.time + dt,
        failed=failed,
    )


def model_from_config(cfg: dict) -> tuple[RobotModel, ContactParams, PdGains]:
    """Build model/contact/gains from a plain config mapping (SI units).

    Recognized keys mirror the dataclass field names under sections
    "robot", "contact", and "pd". Unknown keys are rejected.
    """
    robot_keys = {f for f in RobotModel.__dataclass_fields__}
    contact_keys = {f for f in ContactParams.__dataclass_fields__}
    pd_keys = {f for f in PdGains.__dataclass_fields__}
    sections = {"robot": robot_keys, "contact": contact_keys, "pd": pd_keys}
    for sec, body in cfg.items():
        if sec not in sections:
            raise ValueError(f"unknown config section {sec!r}")
        bad = set(body) - sections[sec]
        if bad:
            raise ValueError(f"unknown keys in {sec!r}: {sorted(bad)}")
    robot = RobotModel(**{
        k: (np.asarray(v, dtype=float) if isinstance(v, (list, tuple)) else v)
        for k, v in cfg.get("robot", {}).items()
    })
    return (
        robot,
        ContactParams(**cfg.get("contact", {})),
        PdGains(**cfg.get("pd", {})),
    )
