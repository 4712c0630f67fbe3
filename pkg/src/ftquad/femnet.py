"""Failure estimation and modulation network.

A beta-VAE-style encoder over a 6-frame observation history (270 inputs)
with three heads: body linear velocity (3), per-joint fault logits (12), and
a 16-dim latent (mu, log sigma). A decoder reconstructs the next observation
from the latent. A separate modulation layer maps the fault vector to an
elementwise affine transform of the latent (z_tilde = g1 * z + g2) that
conditions the policy on the estimated joint condition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import (
    LOG_STD_MAX,
    LOG_STD_MIN,
    Mlp,
    elu,
    elu_grad,
    kl_to_standard_normal,
)

OBS_DIM = 45
HISTORY_FRAMES = 6  # o_t .. o_{t-5}
HISTORY_DIM = OBS_DIM * HISTORY_FRAMES
LATENT_DIM = 16
N_JOINTS = 12


@dataclass
class FemnetOutputs:
    v_hat: np.ndarray  # (..., 3) estimated body linear velocity
    f_logits: np.ndarray  # (..., 12)
    z_mu: np.ndarray  # (..., 16)
    z_log_sigma: np.ndarray  # (..., 16)
    z: np.ndarray  # (..., 16) sampled (training) or mu (inference)
    z_tilde: np.ndarray | None = None  # (..., 16) modulated latent

    @property
    def f_prob(self) -> np.ndarray:
        return sigmoid(self.f_logits)


def sigmoid(x):
    x = np.asarray(x)
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def fault_binarize(f_logits: np.ndarray) -> np.ndarray:
    """Thresholded readout: probability strictly above 0.5 (logit > 0)."""
    return (np.asarray(f_logits) > 0.0).astype(float)


def bce_with_logits(logits: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Elementwise binary cross entropy on logits, numerically stable."""
    logits = np.asarray(logits, dtype=float)
    targets = np.asarray(targets, dtype=float)
    return (
        np.maximum(logits, 0.0)
        - logits * targets
        + np.log1p(np.exp(-np.abs(logits)))
    )


class ModulationLayer:
    """Two-layer net mapping the fault vector to affine latent parameters.

    The scale output is offset by +1 so a zero-initialized output layer is
    the identity modulation.
    """

    def __init__(self, rng=None, latent_dim: int = LATENT_DIM, dtype=np.float32):
        self.latent_dim = latent_dim
        self.net = Mlp([N_JOINTS, 64, 2 * latent_dim], rng=rng, dtype=dtype,
                       out_gain=0.01)

    def gammas(self, f: np.ndarray):
        out, cache = self.net.forward(f)
        g1 = out[..., : self.latent_dim] + 1.0
        g2 = out[..., self.latent_dim :]
        return g1, g2, cache

    def parameters(self):
        return self.net.parameters()


def modulate(z: np.ndarray, f: np.ndarray, layer: ModulationLayer) -> np.ndarray:
    """z_tilde = g1 * z + g2 with (g1, g2) produced from the fault vector."""
    g1, g2, _ = layer.gammas(f)
    return g1 * np.asarray(z) + g2


class Femnet:
    """Encoder/decoder pair plus the modulation layer."""

    def __init__(
        self,
        rng=None,
        dtype=np.float32,
        obs_dim: int = OBS_DIM,
        history_frames: int = HISTORY_FRAMES,
        latent_dim: int = LATENT_DIM,
        beta: float = 1.0,
    ):
        if rng is None:
            rng = np.random.default_rng(0)
        self.obs_dim = obs_dim
        self.history_frames = history_frames
        self.history_dim = obs_dim * history_frames
        self.latent_dim = latent_dim
        self.beta = beta
        self.trunk = Mlp([self.history_dim, 256, 128], rng=rng, dtype=dtype)
        self.vel_head = Mlp([128, 3], rng=rng, dtype=dtype)
        self.fault_head = Mlp([128, N_JOINTS], rng=rng, dtype=dtype)
        self.mu_head = Mlp([128, latent_dim], rng=rng, dtype=dtype)
        self.log_sigma_head = Mlp([128, latent_dim], rng=rng, dtype=dtype, out_gain=0.01)
        self.decoder = Mlp([latent_dim, 128, 256, obs_dim], rng=rng, dtype=dtype)
        self.modulation = ModulationLayer(rng=rng, latent_dim=latent_dim, dtype=dtype)

    def parameters(self):
        return (
            self.trunk.parameters()
            + self.vel_head.parameters()
            + self.fault_head.parameters()
            + self.mu_head.parameters()
            + self.log_sigma_head.parameters()
            + self.decoder.parameters()
            + self.modulation.parameters()
        )

    def encoder_parameters(self):
        return (
            self.trunk.parameters()
            + self.vel_head.parameters()
            + self.fault_head.parameters()
            + self.mu_head.parameters()
            + self.log_sigma_head.parameters()
            + self.decoder.parameters()
        )

    def _features(self, history: np.ndarray):
        history = np.asarray(history)
        if history.shape[-1] != self.history_dim:
            raise ValueError(
                f"history width {history.shape[-1]} != {self.history_dim}"
            )
        t_out, t_cache = self.trunk.forward(history)
        return elu(t_out), t_out, t_cache

    def encode(
        self,
        history: np.ndarray,
        rng: np.random.Generator | None = None,
        sample: bool = False,
    ) -> FemnetOutputs:
        """Run the encoder heads; z is sampled only when requested (training)."""
        h, _, _ = self._features(history)
        v_hat = self.vel_head(h)
        f_logits = self.fault_head(h)
        mu = self.mu_head(h)
        log_sigma = np.clip(self.log_sigma_head(h), LOG_STD_MIN, LOG_STD_MAX)
        if sample:
            if rng is None:
                raise ValueError("sampling requires an rng")
            z = mu + np.exp(log_sigma) * rng.standard_normal(mu.shape).astype(mu.dtype)
        else:
            z = mu
        return FemnetOutputs(v_hat, f_logits, mu, log_sigma, z)

    def decode(self, z: np.ndarray) -> np.ndarray:
        """Predicted next observation from a latent."""
        return self.decoder(z)

    def infer(self, history: np.ndarray) -> FemnetOutputs:
        """Deterministic inference path with modulated latent attached."""
        out = self.encode(history, sample=False)
        out.z_tilde = modulate(out.z, out.f_prob, self.modulation)
        return out

    def loss_and_grads(
        self,
        history: np.ndarray,
        v_bar: np.ndarray,
        f_bar: np.ndarray,
        o_next: np.ndarray,
        rng: np.random.Generator,
    ):
        """Joint estimation + VAE loss with exact gradients.

        L = BCE(fault logits, f_bar) + MSE(v_hat, v_bar)
          + [MSE(o_hat, o_next) + beta * KL(mu, sigma)], batch-mean reduction.
        Returns (total loss, per-term dict, grads aligned with
        encoder_parameters()). The modulation layer is trained in the policy
        loop, not here.
        """
        history = np.asarray(history)
        if history.ndim != 2 or history.shape[0] == 0:
            raise ValueError("empty or mis-shaped batch")
        b = history.shape[0]
        h, t_out, t_cache = self._features(history)
        v_hat, v_cache = self.vel_head.forward(h)
        f_logits, f_cache = self.fault_head.forward(h)
        mu, mu_cache = self.mu_head.forward(h)
        log_sigma_raw, ls_cache = self.log_sigma_head.forward(h)
        clamp_mask = (log_sigma_raw > LOG_STD_MIN) & (log_sigma_raw < LOG_STD_MAX)
        log_sigma = np.clip(log_sigma_raw, LOG_STD_MIN, LOG_STD_MAX)
        sigma = np.exp(log_sigma)
        eps = rng.standard_normal(mu.shape).astype(mu.dtype)
        z = mu + sigma * eps
        o_hat, d_cache = self.decoder.forward(z)

        l_bce = float(bce_with_logits(f_logits, f_bar).mean())
        l_v = float(np.mean((v_hat - v_bar) ** 2))
        l_rec = float(np.mean((o_hat - o_next) ** 2))
        l_kl = float(np.mean(kl_to_standard_normal(mu, log_sigma)))
        total = l_bce + l_v + l_rec + self.beta * l_kl

        d_logits = (sigmoid(f_logits) - f_bar) / f_logits.size
        d_v = 2.0 * (v_hat - v_bar) / v_hat.size
        d_ohat = 2.0 * (o_hat - o_next) / o_hat.size
        g_dec, d_z = self.decoder.backward(d_cache, d_ohat)
        d_mu = self.beta * mu / b + d_z
        d_log_sigma = (self.beta * (sigma * sigma - 1.0) / b + d_z * eps * sigma)
        d_log_sigma = d_log_sigma * clamp_mask

        g_v, dh_v = self.vel_head.backward(v_cache, d_v)
        g_f, dh_f = self.fault_head.backward(f_cache, d_logits)
        g_mu, dh_mu = self.mu_head.backward(mu_cache, d_mu)
        g_ls, dh_ls = self.log_sigma_head.backward(ls_cache, d_log_sigma)
        d_trunk = (dh_v + dh_f + dh_mu + dh_ls) * elu_grad(t_out)
        g_trunk, _ = self.trunk.backward(t_cache, d_trunk)

        grads = g_trunk + g_v + g_f + g_mu + g_ls + g_dec
        terms = {"bce": l_bce, "vel_mse": l_v, "rec_mse": l_rec, "kl": l_kl}
        return total, terms, grads


def history_push(buffer: np.ndarray, obs: np.ndarray) -> np.ndarray:
    """Shift a (n, frames, obs) history buffer, newest frame first."""
    buffer = np.asarray(buffer)
    out = np.empty_like(buffer)
    out[:, 1:] = buffer[:, :-1]
    out[:, 0] = obs
    return out


def history_flatten(buffer: np.ndarray) -> np.ndarray:
    return buffer.reshape(buffer.shape[0], -1)
