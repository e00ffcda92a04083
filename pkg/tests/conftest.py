import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20210614)


def draw_pair_moments(rng, scale=0.7):
    """A random valid Gaussian pair moment set with bounded second moments
    (keeps the Monte Carlo standard error of value-sign estimates ~1e-3)."""
    mu_u, mu_v = rng.uniform(-scale, scale, size=2)
    var_u, var_v = rng.uniform(1e-6, 0.5, size=2)
    corr = rng.uniform(-0.95, 0.95)
    cov = corr * np.sqrt(var_u * var_v)
    return mu_u, mu_v, var_u, var_v, cov


def mc_pair_sample(rng, mu_u, mu_v, var_u, var_v, cov, n):
    """Jointly Gaussian (u, v) draws with the given moments."""
    su = np.sqrt(var_u)
    cond_var = var_v - (cov / su) ** 2 if var_u > 0 else var_v
    z1 = rng.standard_normal(n)
    z2 = rng.standard_normal(n)
    u = mu_u + su * z1
    v = mu_v + (cov / su) * z1 + np.sqrt(max(cond_var, 0.0)) * z2
    return u, v
