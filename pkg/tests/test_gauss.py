"""Gaussian CDFs and sign moments against independent oracles.

Expected values marked "frozen" were computed from the named oracle
(adaptive quadrature of the normal density, high-precision quadrature of the
correlation integral, or large Monte Carlo) and then hardcoded; the slow
oracles are also re-run here at reduced cost as cross-checks.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from l1rls.errors import DegenerateCovarianceError
from l1rls.gauss import (CORR_BOUND, GaussPairMoment, bivariate_normal_cdf,
                         expected_sign, expected_sign_product,
                         expected_value_times_sign, std_normal_cdf)

from conftest import draw_pair_moments, mc_pair_sample


def _quad_normal_cdf(x):
    val, err = quad(lambda t: math.exp(-t * t / 2) / math.sqrt(2 * math.pi),
                    0.0, x, epsabs=1e-13, limit=400)
    assert err < 5e-11
    return 0.5 + val


class TestStdNormalCdf:
    def test_symmetry_point(self):
        assert std_normal_cdf(0.0) == 0.5

    def test_tail_limits(self):
        assert std_normal_cdf(-1e9) == pytest.approx(0.0, abs=1e-12)
        assert std_normal_cdf(1e9) == pytest.approx(1.0, abs=1e-12)

    def test_value_at_196(self):
        # frozen from the quadrature oracle: 0.9750021048517796
        assert std_normal_cdf(1.96) == pytest.approx(0.9750021048517795,
                                                     abs=1e-12)

    def test_against_quadrature_oracle(self):
        for x in (-3.7, -1.0, -0.2, 0.6, 1.96, 4.2):
            assert std_normal_cdf(x) == pytest.approx(_quad_normal_cdf(x),
                                                      abs=5e-11)

    def test_complement_identity(self, rng):
        xs = rng.uniform(-10.0, 10.0, size=10_000)
        vals = np.array([std_normal_cdf(x) + std_normal_cdf(-x) for x in xs])
        assert np.abs(vals - 1.0).max() <= 1e-14

    def test_monotone(self, rng):
        xs = np.sort(rng.uniform(-8.0, 8.0, size=500))
        vals = np.array([std_normal_cdf(x) for x in xs])
        assert np.all(np.diff(vals) >= 0.0)

    def test_non_finite_rejected(self):
        for bad in (math.nan, math.inf, -math.inf):
            with pytest.raises(ValueError):
                std_normal_cdf(bad)


class TestBivariateNormalCdf:
    def test_independent_symmetric_quadrant(self):
        assert bivariate_normal_cdf([0, 0], [0, 0], np.eye(2)) == pytest.approx(
            0.25, abs=1e-12)

    def test_arcsine_identity_at_half(self):
        expected = 0.25 + math.asin(0.5) / (2 * math.pi)
        got = bivariate_normal_cdf([0, 0], [0, 0], [[1, 0.5], [0.5, 1]])
        assert got == pytest.approx(expected, abs=1e-10)

    def test_arcsine_identity_vs_mc_oracle(self):
        # the identity itself cross-checked by simulation before being relied on
        rng = np.random.default_rng(8675309)
        n = 10 ** 7
        z1 = rng.standard_normal(n)
        z2 = rng.standard_normal(n)
        v = 0.5 * z1 + math.sqrt(1 - 0.25) * z2
        mc = np.mean((z1 <= 0) & (v <= 0))
        expected = 0.25 + math.asin(0.5) / (2 * math.pi)
        assert mc == pytest.approx(expected, abs=5e-4)
        assert bivariate_normal_cdf([0, 0], [0, 0], [[1, 0.5], [0.5, 1]]) == \
            pytest.approx(mc, abs=5e-4)

    def test_translation_invariance(self):
        assert bivariate_normal_cdf([3, 0], [3, 0], np.diag([4.0, 9.0])) == \
            pytest.approx(0.25, abs=1e-12)
        a = bivariate_normal_cdf([0.3, -0.2], [0.1, 0.4],
                                 [[2.0, 0.7], [0.7, 1.5]])
        b = bivariate_normal_cdf([1.3, 0.8], [1.1, 1.4],
                                 [[2.0, 0.7], [0.7, 1.5]])
        assert a == pytest.approx(b, abs=1e-12)

    def test_independence_product(self, rng):
        for _ in range(20):
            x = rng.uniform(-2, 2, size=2)
            mu = rng.uniform(-2, 2, size=2)
            var = rng.uniform(0.1, 3.0, size=2)
            joint = bivariate_normal_cdf(x, mu, np.diag(var))
            marg = (std_normal_cdf((x[0] - mu[0]) / math.sqrt(var[0]))
                    * std_normal_cdf((x[1] - mu[1]) / math.sqrt(var[1])))
            assert joint == pytest.approx(marg, abs=1e-12)

    def test_against_mpmath_oracle(self):
        # independent oracle: arbitrary-precision quadrature of the
        # unsubstituted correlation integral
        mpmath = pytest.importorskip("mpmath")
        mpmath.mp.dps = 30

        def oracle(h, k, r):
            base = mpmath.ncdf(h) * mpmath.ncdf(k)
            f = lambda t: mpmath.exp(
                -(h * h - 2 * t * h * k + k * k) / (2 * (1 - t * t))
            ) / mpmath.sqrt(1 - t * t)
            return float(base + mpmath.quad(f, [0, r]) / (2 * mpmath.pi))

        cases = [(0.0, 0.0, 0.5), (1.2, -0.3, 0.7), (-0.5, 2.0, -0.9),
                 (0.3, 0.3, 0.999), (2.0, -2.0, -0.4), (-1.1, -0.4, 0.95)]
        for h, k, r in cases:
            got = bivariate_normal_cdf([h, k], [0, 0], [[1, r], [r, 1]])
            assert got == pytest.approx(oracle(h, k, r), abs=1e-10)

    def test_monotone_in_each_coordinate(self, rng):
        sigma = np.array([[1.0, -0.6], [-0.6, 2.0]])
        for _ in range(30):
            x = rng.uniform(-2, 2, size=2)
            bump = rng.uniform(0.0, 1.5)
            base = bivariate_normal_cdf(x, [0, 0], sigma)
            assert bivariate_normal_cdf([x[0] + bump, x[1]], [0, 0], sigma) \
                >= base - 1e-10
            assert bivariate_normal_cdf([x[0], x[1] + bump], [0, 0], sigma) \
                >= base - 1e-10

    def test_near_singular_correlation(self):
        # comonotone limit: P(X <= h, X <= k) = Phi(min(h, k))
        got = bivariate_normal_cdf([0.4, 1.3], [0, 0],
                                   [[1, CORR_BOUND], [CORR_BOUND, 1]])
        assert got == pytest.approx(std_normal_cdf(0.4), abs=1e-5)

    def test_degenerate_covariance_rejected(self):
        with pytest.raises(DegenerateCovarianceError):
            bivariate_normal_cdf([0, 0], [0, 0], [[0.0, 0.0], [0.0, 1.0]])
        with pytest.raises(DegenerateCovarianceError):
            bivariate_normal_cdf([0, 0], [0, 0], [[1.0, 1.2], [1.2, 1.0]])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            bivariate_normal_cdf([np.nan, 0], [0, 0], np.eye(2))


class TestExpectedSign:
    def test_symmetric_zero(self):
        assert expected_sign(0.0, 1.0) == 0.0

    def test_deterministic_limit(self):
        assert expected_sign(0.5, 0.0) == 1.0
        assert expected_sign(-0.5, 0.0) == -1.0
        assert expected_sign(0.0, 0.0) == 0.0

    def test_value_one_one(self):
        # frozen from the quadrature oracle: 1 - 2 * Phi(-1)
        assert expected_sign(1.0, 1.0) == pytest.approx(0.6826894921370859,
                                                        abs=1e-12)
        assert expected_sign(1.0, 1.0) == pytest.approx(
            1.0 - 2.0 * _quad_normal_cdf(-1.0), abs=1e-11)

    def test_odd_in_mu(self, rng):
        for _ in range(200):
            mu = rng.uniform(-5, 5)
            sigma = rng.uniform(0.01, 3)
            assert expected_sign(-mu, sigma) == -expected_sign(mu, sigma)

    def test_magnitude_below_one(self, rng):
        for _ in range(200):
            mu = rng.uniform(-4, 4)
            sigma = rng.uniform(0.5, 3)
            assert abs(expected_sign(mu, sigma)) < 1.0

    def test_vectorized_matches_scalar(self, rng):
        mu = rng.uniform(-2, 2, size=16)
        sigma = rng.uniform(0.0, 2, size=16)
        sigma[3] = 0.0
        vec = expected_sign(mu, sigma)
        for i in range(16):
            assert vec[i] == expected_sign(mu[i], sigma[i])

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            expected_sign(0.0, -1.0)


class TestExpectedSignProduct:
    def test_independent_symmetric(self):
        assert expected_sign_product(GaussPairMoment(0, 0, 1, 1, 0)) == \
            pytest.approx(0.0, abs=1e-14)

    def test_orthant_identity(self):
        # E{sgn u sgn v} = (2/pi) asin(rho) for a zero-mean unit pair
        got = expected_sign_product(GaussPairMoment(0, 0, 1, 1, 0.5))
        assert got == pytest.approx(2 / math.pi * math.asin(0.5), abs=1e-10)

    def test_almost_surely_positive(self):
        assert expected_sign_product(GaussPairMoment(10, 10, 1, 1, 0)) == \
            pytest.approx(1.0, abs=1e-10)

    def test_exchange_symmetry(self, rng):
        for _ in range(100):
            pair = GaussPairMoment(*draw_pair_moments(rng, scale=1.5))
            assert expected_sign_product(pair) == pytest.approx(
                expected_sign_product(pair.swapped()), abs=1e-14)

    def test_independence_factorization(self, rng):
        for _ in range(50):
            mu_u, mu_v = rng.uniform(-2, 2, size=2)
            vu, vv = rng.uniform(0.05, 2, size=2)
            pair = GaussPairMoment(mu_u, mu_v, vu, vv, 0.0)
            expected = (expected_sign(mu_u, math.sqrt(vu))
                        * expected_sign(mu_v, math.sqrt(vv)))
            assert expected_sign_product(pair) == pytest.approx(expected,
                                                                abs=1e-12)

    def test_monte_carlo_spot_checks(self, rng):
        for _ in range(5):
            moments = draw_pair_moments(rng)
            u, v = mc_pair_sample(rng, *moments, n=10 ** 6)
            mc = float(np.mean(np.sign(u) * np.sign(v)))
            got = expected_sign_product(GaussPairMoment(*moments))
            assert got == pytest.approx(mc, abs=5e-3)

    def test_degenerate_fallbacks(self):
        # deterministic u: sgn(mu_u) * E{sgn v}
        got = expected_sign_product(GaussPairMoment(-0.4, 0.8, 0.0, 1.0, 0.0))
        assert got == pytest.approx(-expected_sign(0.8, 1.0), abs=1e-14)
        # both deterministic
        assert expected_sign_product(GaussPairMoment(-0.4, 0.8, 0, 0, 0)) == -1.0


class TestExpectedValueTimesSign:
    def test_independent_zero_mean(self):
        assert expected_value_times_sign(GaussPairMoment(0, 0, 1, 1, 0)) == \
            pytest.approx(0.0, abs=1e-14)

    def test_zero_mean_identity(self):
        # frozen: E{u sgn v} = rho * sqrt(2/pi) / sigma_v = 0.5585191925620058
        got = expected_value_times_sign(GaussPairMoment(0, 0, 1, 1, 0.7))
        assert got == pytest.approx(0.5585191925620058, abs=1e-12)

    def test_uncorrelated_factorization(self, rng):
        for _ in range(50):
            mu_u, mu_v = rng.uniform(-2, 2, size=2)
            vu, vv = rng.uniform(0.05, 2, size=2)
            pair = GaussPairMoment(mu_u, mu_v, vu, vv, 0.0)
            expected = mu_u * expected_sign(mu_v, math.sqrt(vv))
            assert expected_value_times_sign(pair) == pytest.approx(expected,
                                                                    abs=1e-12)

    def test_positive_scaling_in_u(self, rng):
        for _ in range(30):
            mu_u, mu_v, vu, vv, cov = draw_pair_moments(rng)
            alpha = rng.uniform(0.1, 4.0)
            base = expected_value_times_sign(
                GaussPairMoment(mu_u, mu_v, vu, vv, cov))
            scaled = expected_value_times_sign(
                GaussPairMoment(alpha * mu_u, mu_v, alpha ** 2 * vu, vv,
                                alpha * cov))
            assert scaled == pytest.approx(alpha * base, rel=1e-10, abs=1e-12)

    def test_near_deterministic_v(self):
        # v concentrated at 5: sgn v = +1 almost surely, so E{u sgn v} = mu_u.
        # 1e-6-scale variance goes through the closed form, smaller variance
        # through the deterministic fallback; both give mu_u.
        got = expected_value_times_sign(GaussPairMoment(2, 5, 1, 1e-6, 0))
        assert got == pytest.approx(2.0, abs=1e-12)
        got = expected_value_times_sign(GaussPairMoment(2, 5, 1, 1e-16, 0))
        assert got == 2.0

    def test_deterministic_u_fallback(self):
        got = expected_value_times_sign(GaussPairMoment(0.3, 0.6, 0.0, 0.25, 0))
        assert got == pytest.approx(0.3 * expected_sign(0.6, 0.5), abs=1e-14)

    def test_perfectly_correlated_is_folded_mean(self, rng):
        # u = v: E{v sgn v} = E|v|, the folded-normal mean
        for _ in range(20):
            mu = rng.uniform(-2, 2)
            var = rng.uniform(0.05, 2)
            pair = GaussPairMoment(mu, mu, var, var, var)
            sd = math.sqrt(var)
            folded = (sd * math.sqrt(2 / math.pi) * math.exp(-mu * mu / (2 * var))
                      + mu * (1 - 2 * std_normal_cdf(-mu / sd)))
            assert expected_value_times_sign(pair) == pytest.approx(
                folded, rel=1e-7, abs=1e-9)

    def test_monte_carlo_spot_checks(self, rng):
        for _ in range(5):
            moments = draw_pair_moments(rng)
            u, v = mc_pair_sample(rng, *moments, n=10 ** 6)
            mc = float(np.mean(u * np.sign(v)))
            got = expected_value_times_sign(GaussPairMoment(*moments))
            assert got == pytest.approx(mc, abs=5e-3)


class TestGaussPairMoment:
    def test_covariance_clamped_to_psd(self):
        pair = GaussPairMoment(0, 0, 0.04, 0.09, 1.0)
        assert pair.rho_uv ** 2 <= pair.sigma_u2 * pair.sigma_v2
        assert pair.rho_uv == pytest.approx(CORR_BOUND * 0.06)

    def test_zero_variance_forces_zero_covariance(self):
        assert GaussPairMoment(1, 2, 0.0, 1.0, 0.5).rho_uv == 0.0

    def test_negative_variance_rejected(self):
        with pytest.raises(ValueError):
            GaussPairMoment(0, 0, -1.0, 1.0, 0.0)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            GaussPairMoment(np.nan, 0, 1.0, 1.0, 0.0)

    def test_inverse_covariance_theta(self, rng):
        for _ in range(50):
            _, _, vu, vv, cov = draw_pair_moments(rng)
            pair = GaussPairMoment(0, 0, vu, vv, cov)
            a, b, c, theta = pair.inverse_covariance()
            assert theta > 0
            # algebraic identity: theta = 1 / sigma_v^2
            assert theta == pytest.approx(1.0 / vv, rel=1e-9)
            det = vu * vv - pair.rho_uv ** 2
            assert a == pytest.approx(vv / det, rel=1e-12)
