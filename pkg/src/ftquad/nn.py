"""Minimal dense network kit: MLPs with explicit forward/backward passes,
ELU activations, Adam, and diagonal-Gaussian utilities.

Parameters default to float32 for checkpoint portability; a float64 mode is
available (dtype argument) for gradient verification against finite
differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
LOG_2PI = float(np.log(2.0 * np.pi))


def elu(x):
    """ELU with alpha = 1: x for x > 0, exp(x) - 1 otherwise."""
    x = np.asarray(x)
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def elu_grad(x):
    x = np.asarray(x)
    return np.where(x > 0, 1.0, np.exp(np.minimum(x, 0.0)))


def orthogonal(rng: np.random.Generator, rows: int, cols: int, gain: float, dtype):
    a = rng.standard_normal((rows, cols))
    u, _, vt = np.linalg.svd(a, full_matrices=False)
    w = u if u.shape == (rows, cols) else vt
    return (gain * w).astype(dtype)


class Mlp:
    """Fully connected net, ELU hidden layers, linear output.

    forward returns (y, cache); backward consumes the cache and the output
    gradient and returns exact reverse-mode parameter/input gradients.
    """

    def __init__(self, widths, rng=None, dtype=np.float32, out_gain: float = 1.0):
        if len(widths) < 2:
            raise ValueError("need at least input and output widths")
        if rng is None:
            rng = np.random.default_rng(0)
        self.widths = tuple(int(w) for w in widths)
        self.dtype = dtype
        self.weights = []
        self.biases = []
        n_layers = len(widths) - 1
        for i in range(n_layers):
            gain = out_gain if i == n_layers - 1 else np.sqrt(2.0)
            self.weights.append(orthogonal(rng, widths[i], widths[i + 1], gain, dtype))
            self.biases.append(np.zeros(widths[i + 1], dtype=dtype))

    @property
    def in_dim(self) -> int:
        return self.widths[0]

    @property
    def out_dim(self) -> int:
        return self.widths[-1]

    def parameters(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def set_parameters(self, params):
        expect = len(self.weights) * 2
        if len(params) != expect:
            raise ValueError(f"expected {expect} tensors, got {len(params)}")
        for i in range(len(self.weights)):
            w, b = params[2 * i], params[2 * i + 1]
            if w.shape != self.weights[i].shape or b.shape != self.biases[i].shape:
                raise ValueError("parameter shape mismatch")
            self.weights[i] = w.astype(self.dtype)
            self.biases[i] = b.astype(self.dtype)

    def forward(self, x):
        x = np.asarray(x, dtype=self.dtype)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[-1] != self.in_dim:
            raise ValueError(f"input width {x.shape[-1]} != {self.in_dim}")
        acts = [x]
        pre = []
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            pre.append(z)
            h = z if i == last else elu(z)
            acts.append(h)
        cache = (acts, pre)
        y = h[0] if squeeze else h
        return y, cache

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, cache, dy):
        """Gradients of sum(dy * y) w.r.t. parameters and input."""
        acts, pre = cache
        if len(acts) != len(self.weights) + 1:
            raise ValueError("cache does not match this network")
        dy = np.asarray(dy, dtype=self.dtype)
        if dy.ndim == 1:
            dy = dy[None, :]
        grads = [None] * (2 * len(self.weights))
        delta = dy
        for i in range(len(self.weights) - 1, -1, -1):
            if i != len(self.weights) - 1:
                delta = delta * elu_grad(pre[i])
            grads[2 * i] = acts[i].T @ delta
            grads[2 * i + 1] = delta.sum(axis=0)
            delta = delta @ self.weights[i].T
        return grads, delta


@dataclass
class AdamState:
    """Per-parameter first/second moment accumulators and step count."""

    m: list
    v: list
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @staticmethod
    def for_params(params, lr: float = 1e-3) -> "AdamState":
        return AdamState(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            lr=lr,
        )


def adam_step(params, grads, state: AdamState):
    """One bias-corrected Adam update; mutates params and state in place."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("parameter/gradient/state length mismatch")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.step
    bc2 = 1.0 - b2 ** state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        g = np.asarray(g, dtype=p.dtype)
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state


@dataclass
class DiagGaussian:
    """Diagonal Gaussian over actions; log-std clamped to a sane range."""

    mean: np.ndarray
    log_std: np.ndarray

    def __post_init__(self):
        self.log_std = np.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX)

    @property
    def std(self) -> np.ndarray:
        return np.exp(self.log_std)


def gaussian_log_prob(d: DiagGaussian, a: np.ndarray) -> np.ndarray:
    """Log density; sums over the trailing action dimension."""
    z = (a - d.mean) / d.std
    return -0.5 * (z * z + LOG_2PI).sum(axis=-1) - np.sum(
        d.log_std, axis=-1
    )


def gaussian_sample(d: DiagGaussian, rng: np.random.Generator) -> np.ndarray:
    noise = rng.standard_normal(np.shape(d.mean))
    return d.mean + d.std * noise


def gaussian_entropy(d: DiagGaussian) -> np.ndarray:
    return np.sum(d.log_std + 0.5 * (1.0 + LOG_2PI), axis=-1)


def kl_to_standard_normal(mu: np.ndarray, log_sigma: np.ndarray) -> np.ndarray:
    """KL(N(mu, diag sigma^2) || N(0, I)); sums over the trailing dimension."""
    mu = np.asarray(mu)
    log_sigma = np.asarray(log_sigma)
    return 0.5 * np.sum(
        mu * mu + np.exp(2.0 * log_sigma) - 1.0 - 2.0 * log_sigma, axis=-1
    )


def clip_grads_by_global_norm(grads, max_norm: float) -> float:
    """Scale gradients in place so the global norm is at most max_norm."""
    total = 0.0
    for g in grads:
        total += float(np.sum(np.asarray(g, dtype=np.float64) ** 2))
    norm = float(np.sqrt(total))
    if norm > max_norm and norm > 0:
        scale = max_norm / norm
        for g in grads:
            g *= scale
    return norm
