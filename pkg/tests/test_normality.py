"""Henze-Zirkler test: size on true Gaussians, power on gross violations,
degenerate-sample handling, and the chunked statistic against a direct
quadratic-time evaluation."""

import math

import numpy as np
import pytest

from l1rls.errors import DegenerateSampleError
from l1rls.normality import henze_zirkler_statistic


def _direct_statistic(X):
    """Plain O(n^2) evaluation of the statistic, no chunking or whitening
    shortcuts; oracle for the production implementation."""
    n, d = X.shape
    centered = X - X.mean(axis=0)
    S = centered.T @ centered / n
    S_inv = np.linalg.inv(S)
    beta = ((n * (2 * d + 1)) / 4) ** (1 / (d + 4)) / math.sqrt(2)
    b2 = beta * beta
    pair_sum = 0.0
    for i in range(n):
        for j in range(n):
            diff = centered[i] - centered[j]
            pair_sum += math.exp(-0.5 * b2 * (diff @ S_inv @ diff))
    one_sum = 0.0
    for i in range(n):
        one_sum += math.exp(-b2 / (2 * (1 + b2)) * (centered[i] @ S_inv @ centered[i]))
    return n * (pair_sum / n ** 2
                - 2 * (1 + b2) ** (-d / 2) * one_sum / n
                + (1 + 2 * b2) ** (-d / 2))


def test_statistic_matches_direct_evaluation():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((300, 3))
    res = henze_zirkler_statistic(X)
    assert res.statistic == pytest.approx(_direct_statistic(X), rel=1e-10)
    assert res.statistic >= 0.0


def test_deterministic():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((1500, 2))
    a = henze_zirkler_statistic(X)
    b = henze_zirkler_statistic(X.copy())
    assert a == b


def test_size_on_gaussian_samples():
    # test-level size check: at significance 0.05 the test should accept a
    # genuinely Gaussian sample in at least 94 of 100 seeded repetitions
    accepted = 0
    for seed in range(100):
        rng = np.random.default_rng(1000 + seed)
        X = rng.standard_normal((5000, 2))
        if not henze_zirkler_statistic(X).reject_at_0_05:
            accepted += 1
    print(f"gaussian acceptances: {accepted}/100")
    assert accepted >= 94


def test_power_on_uniform_samples():
    for seed in range(5):
        rng = np.random.default_rng(2000 + seed)
        X = rng.uniform(size=(5000, 2))
        assert henze_zirkler_statistic(X).reject_at_0_05


def test_correlated_gaussian_accepted():
    rng = np.random.default_rng(77)
    z = rng.standard_normal((5000, 2))
    X = z @ np.linalg.cholesky([[1.0, 0.8], [0.8, 1.0]]).T
    assert not henze_zirkler_statistic(X).reject_at_0_05


def test_constant_column_rejected():
    rng = np.random.default_rng(3)
    X = np.column_stack([rng.standard_normal(500), np.full(500, 2.5)])
    with pytest.raises(DegenerateSampleError):
        henze_zirkler_statistic(X)


def test_too_few_rows_rejected():
    with pytest.raises(DegenerateSampleError):
        henze_zirkler_statistic(np.zeros((2, 2)))


def test_non_finite_rejected():
    X = np.ones((10, 2))
    X[3, 1] = np.nan
    with pytest.raises(DegenerateSampleError):
        henze_zirkler_statistic(X)


def test_bad_shape_rejected():
    with pytest.raises(DegenerateSampleError):
        henze_zirkler_statistic(np.zeros(10))
