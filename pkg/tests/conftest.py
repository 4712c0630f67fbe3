import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def finite_difference_check(forward, params, grads, h=1e-5, rel_tol=1e-4,
                            coords_per_tensor=6, rng=None):
    """Compare analytic grads against central differences on sampled coords.

    `forward` is a zero-argument callable returning the scalar loss with the
    current parameter values; `params` are the live arrays it reads.
    """
    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for p, g in zip(params, grads):
        flat_p = p.reshape(-1)
        flat_g = np.asarray(g).reshape(-1)
        n = flat_p.size
        for _ in range(min(coords_per_tensor, n)):
            i = int(rng.integers(0, n))
            orig = flat_p[i]
            flat_p[i] = orig + h
            up = forward()
            flat_p[i] = orig - h
            down = forward()
            flat_p[i] = orig
            fd = (up - down) / (2 * h)
            denom = max(abs(fd), abs(flat_g[i]), 1e-8)
            rel = abs(fd - flat_g[i]) / denom
            worst = max(worst, rel)
            assert rel < rel_tol, (
                f"finite-difference mismatch: analytic {flat_g[i]:.3e}, "
                f"numeric {fd:.3e}, rel err {rel:.3e}"
            )
    return worst
