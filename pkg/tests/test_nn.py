import numpy as np
import pytest

from conftest import finite_difference_check
from ftquad.nn import (
    AdamState,
    DiagGaussian,
    Mlp,
    adam_step,
    clip_grads_by_global_norm,
    elu,
    gaussian_entropy,
    gaussian_log_prob,
    gaussian_sample,
    kl_to_standard_normal,
)


class TestElu:
    def test_values(self):
        assert elu(0.0) == 0.0
        assert elu(2.0) == 2.0
        assert np.isclose(elu(-1.0), np.exp(-1) - 1)

    def test_c1_at_zero(self):
        h = 1e-7
        left = (elu(0.0) - elu(-h)) / h
        right = (elu(h) - elu(0.0)) / h
        assert abs(left - 1.0) < 1e-6
        assert abs(right - 1.0) < 1e-9


class TestForward:
    def test_zero_params_zero_output(self, rng):
        net = Mlp([4, 8, 3], rng=rng, dtype=np.float64)
        net.set_parameters([np.zeros_like(p) for p in net.parameters()])
        y, _ = net.forward(rng.standard_normal((5, 4)))
        assert np.array_equal(y, np.zeros((5, 3)))

    def test_identity_single_layer(self, rng):
        net = Mlp([3, 3], rng=rng, dtype=np.float64)
        net.set_parameters([np.eye(3), np.zeros(3)])
        x = rng.standard_normal((7, 3))
        y, _ = net.forward(x)
        assert np.allclose(y, x, atol=1e-15)

    def test_matrix_chain_oracle(self, rng):
        net = Mlp([6, 16, 8, 4], rng=rng, dtype=np.float64)
        x = rng.standard_normal((9, 6))
        y, _ = net.forward(x)
        w0, b0, w1, b1, w2, b2 = net.parameters()
        h = x @ w0 + b0
        h = np.where(h > 0, h, np.exp(np.minimum(h, 0)) - 1)
        h = h @ w1 + b1
        h = np.where(h > 0, h, np.exp(np.minimum(h, 0)) - 1)
        expected = h @ w2 + b2
        assert np.allclose(y, expected, atol=1e-12)

    def test_shape_mismatch_rejected(self, rng):
        net = Mlp([4, 3], rng=rng)
        with pytest.raises(ValueError):
            net.forward(np.zeros((2, 5)))


class TestBackward:
    def test_zero_upstream_zero_grads(self, rng):
        net = Mlp([4, 8, 2], rng=rng, dtype=np.float64)
        x = rng.standard_normal((6, 4))
        _, cache = net.forward(x)
        grads, dx = net.backward(cache, np.zeros((6, 2)))
        assert all(np.array_equal(g, np.zeros_like(g)) for g in grads)
        assert np.array_equal(dx, np.zeros_like(x))

    def test_outer_product_single_linear_layer(self, rng):
        net = Mlp([5, 3], rng=rng, dtype=np.float64)
        x = rng.standard_normal((1, 5))
        dy = rng.standard_normal((1, 3))
        _, cache = net.forward(x)
        grads, _ = net.backward(cache, dy)
        assert np.allclose(grads[0], x.T @ dy, atol=1e-15)
        assert np.allclose(grads[1], dy[0], atol=1e-15)

    def test_finite_differences_three_hidden(self, rng):
        for widths in ([3, 5, 2], [4, 8, 6, 3], [5, 7, 6, 4, 2]):
            net = Mlp(widths, rng=rng, dtype=np.float64)
            x = rng.standard_normal((4, widths[0]))
            target = rng.standard_normal((4, widths[-1]))

            def loss():
                y, _ = net.forward(x)
                return float(np.sum((y - target) ** 2))

            y, cache = net.forward(x)
            grads, _ = net.backward(cache, 2.0 * (y - target))
            finite_difference_check(loss, net.parameters(), grads, rng=rng)


class TestAdam:
    def test_zero_gradient_no_change(self, rng):
        params = [rng.standard_normal((3, 3)), rng.standard_normal(3)]
        ref = [p.copy() for p in params]
        state = AdamState.for_params(params)
        for _ in range(10):
            adam_step(params, [np.zeros_like(p) for p in params], state)
        assert all(np.array_equal(p, r) for p, r in zip(params, ref))

    def test_first_step_is_lr_times_sign(self, rng):
        params = [rng.standard_normal(6)]
        before = params[0].copy()
        grads = [rng.standard_normal(6)]
        state = AdamState.for_params(params, lr=1e-3)
        adam_step(params, grads, state)
        update = params[0] - before
        expected = -1e-3 * np.sign(grads[0])
        assert np.allclose(update, expected, atol=1e-8)

    def test_quadratic_bowl_converges(self, rng):
        w = [rng.uniform(-1, 1, 10)]
        state = AdamState.for_params(w, lr=1e-2)
        for _ in range(5000):
            if np.linalg.norm(w[0]) < 1e-3:
                break
            adam_step(w, [2.0 * w[0]], state)
        assert np.linalg.norm(w[0]) < 1e-3


class TestGaussian:
    def test_log_prob_at_mean_unit_std(self):
        k = 4
        d = DiagGaussian(mean=np.zeros(k), log_std=np.zeros(k))
        assert np.isclose(gaussian_log_prob(d, np.zeros(k)),
                          -(k / 2) * np.log(2 * np.pi), atol=1e-12)

    def test_entropy_unit_std_dim_1(self):
        d = DiagGaussian(mean=np.zeros(1), log_std=np.zeros(1))
        assert np.isclose(gaussian_entropy(d), 0.5 * np.log(2 * np.pi * np.e),
                          atol=1e-9)
        assert np.isclose(gaussian_entropy(d), 1.41894, atol=1e-5)

    def test_sample_mean_monte_carlo(self, rng):
        n = 100_000
        mean = np.array([0.5, -1.0, 2.0])
        d = DiagGaussian(mean=np.tile(mean, (n, 1)),
                         log_std=np.zeros((n, 3)))
        samples = gaussian_sample(d, rng)
        tol = 4.0 / np.sqrt(n)
        assert np.all(np.abs(samples.mean(axis=0) - mean) < tol)

    def test_log_std_clamped(self):
        d = DiagGaussian(mean=np.zeros(2), log_std=np.array([-50.0, 50.0]))
        assert np.all(d.log_std >= -20.0) and np.all(d.log_std <= 2.0)


class TestKl:
    def test_standard_normal_is_zero(self):
        assert kl_to_standard_normal(np.zeros(4), np.zeros(4)) == 0.0

    def test_unit_mean_unit_std(self):
        assert np.isclose(kl_to_standard_normal(np.array([1.0]), np.array([0.0])),
                          0.5, atol=1e-12)

    def test_non_negative(self, rng):
        for _ in range(200):
            mu = rng.uniform(-3, 3, 8)
            log_sigma = rng.uniform(-2, 1, 8)
            assert kl_to_standard_normal(mu, log_sigma) >= 0.0

    def test_monte_carlo_oracle(self, rng):
        mu = np.array([0.7, -0.3])
        log_sigma = np.array([-0.5, 0.4])
        sigma = np.exp(log_sigma)
        n = 1_000_000
        x = mu + sigma * rng.standard_normal((n, 2))
        log_q = -0.5 * np.sum(((x - mu) / sigma) ** 2 + 2 * log_sigma
                              + np.log(2 * np.pi), axis=1)
        log_p = -0.5 * np.sum(x**2 + np.log(2 * np.pi), axis=1)
        mc = np.mean(log_q - log_p)
        closed = kl_to_standard_normal(mu, log_sigma)
        assert abs(mc - closed) / closed < 0.01


class TestGradClip:
    def test_below_threshold_untouched(self, rng):
        grads = [np.array([0.3, 0.4])]
        norm = clip_grads_by_global_norm(grads, 1.0)
        assert np.isclose(norm, 0.5)
        assert np.allclose(grads[0], [0.3, 0.4])

    def test_above_threshold_rescaled(self):
        grads = [np.array([3.0, 4.0])]
        clip_grads_by_global_norm(grads, 1.0)
        assert np.isclose(np.linalg.norm(grads[0]), 1.0)
