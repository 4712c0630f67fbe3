"""Quaternion helpers, vectorized over leading batch dimensions.

Convention: q = (w, x, y, z), unit norm, rotating body-frame vectors into
the world frame.
"""

from __future__ import annotations

import numpy as np


def identity(n: int | None = None) -> np.ndarray:
    if n is None:
        return np.array([1.0, 0.0, 0.0, 0.0])
    q = np.zeros((n, 4))
    q[:, 0] = 1.0
    return q


def normalize(q: np.ndarray) -> np.ndarray:
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate body-frame vectors v into the world frame."""
    w = q[..., :1]
    u = q[..., 1:]
    uv = np.cross(u, v)
    return v + 2.0 * (w * uv + np.cross(u, uv))


def rotate_inverse(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate world-frame vectors v into the body frame."""
    w = q[..., :1]
    u = -q[..., 1:]
    uv = np.cross(u, v)
    return v + 2.0 * (w * uv + np.cross(u, uv))


def from_axis_angle(axis: np.ndarray, angle) -> np.ndarray:
    angle = np.asarray(angle, dtype=float)
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis, axis=-1, keepdims=True)
    half = angle / 2.0
    s = np.sin(half)
    return np.concatenate(
        [np.cos(half)[..., None], axis * s[..., None]], axis=-1
    )


def integrate(q: np.ndarray, omega_body: np.ndarray, dt: float) -> np.ndarray:
    """Advance orientation by body angular velocity over dt; renormalized."""
    angle = np.linalg.norm(omega_body, axis=-1)
    half = 0.5 * angle * dt
    # sin(half)/angle, safe at angle -> 0
    small = angle < 1e-12
    scale = np.where(small, 0.5 * dt, np.sin(half) / np.where(small, 1.0, angle))
    dq = np.concatenate([np.cos(half)[..., None], omega_body * scale[..., None]], axis=-1)
    return normalize(multiply(q, dq))


def yaw(q: np.ndarray) -> np.ndarray:
    """Yaw angle (rotation about world z) of the orientation."""
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return np.arctan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))


def roll_pitch(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    roll = np.arctan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
    pitch = np.arcsin(np.clip(2.0 * (w * y - z * x), -1.0, 1.0))
    return roll, pitch
