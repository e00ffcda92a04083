"""Gaussian CDFs and closed-form sign moments of jointly Gaussian pairs.

The transient models need three expectations involving the sign of Gaussian
variables: E{sgn u}, E{sgn u * sgn v} and E{u * sgn v}. All three have closed
forms in the first two moments of the pair. The sign-sign moment is built
from four bivariate normal CDF evaluations; the CDF itself is computed by
Gauss-Legendre quadrature of the correlation-integral identity, which is
deterministic and accurate to well below the 1e-10 contract.

All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import DegenerateCovarianceError

__all__ = [
    "GaussPairMoment",
    "std_normal_cdf",
    "bivariate_normal_cdf",
    "expected_sign",
    "expected_sign_product",
    "expected_value_times_sign",
    "VAR_FLOOR",
    "CORR_BOUND",
]

# Degeneracy policy: variances below VAR_FLOOR are treated as exactly
# deterministic, and correlation coefficients are kept strictly inside
# (-1, 1) so the 2x2 covariance remains invertible. The recursions feeding
# these moments start from a deterministic state, so exactly singular pairs
# are routine and must degrade gracefully rather than raise.
VAR_FLOOR = 1e-14
CORR_BOUND = 1.0 - 1e-8

_SQRT2 = math.sqrt(2.0)
_TWO_PI = 2.0 * math.pi
# Quadrature orders tried in turn; refinement stops once two successive
# orders agree to better than _QUAD_TOL.
_QUAD_ORDERS = (32, 64, 128, 256, 512)
_QUAD_TOL = 1e-11

_leggauss_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    if order not in _leggauss_cache:
        _leggauss_cache[order] = np.polynomial.legendre.leggauss(order)
    return _leggauss_cache[order]


def _clamped_cov(var_u: float, var_v: float, cov):
    """Clamp a covariance so the implied correlation is within +-CORR_BOUND."""
    bound = CORR_BOUND * np.sqrt(var_u * var_v)
    return np.clip(cov, -bound, bound)


@dataclass(frozen=True)
class GaussPairMoment:
    """First and second moments of a jointly Gaussian scalar pair (u, v).

    The covariance entry is clamped at construction so that the implied
    correlation coefficient lies in [-CORR_BOUND, CORR_BOUND], keeping the
    2x2 covariance positive semidefinite (and strictly definite once the
    variance floor is applied).
    """

    mu_u: float
    mu_v: float
    sigma_u2: float
    sigma_v2: float
    rho_uv: float

    def __post_init__(self):
        vals = (self.mu_u, self.mu_v, self.sigma_u2, self.sigma_v2, self.rho_uv)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite moment in {vals}")
        if self.sigma_u2 < 0.0 or self.sigma_v2 < 0.0:
            raise ValueError("variances must be nonnegative")
        object.__setattr__(
            self, "rho_uv",
            float(_clamped_cov(self.sigma_u2, self.sigma_v2, self.rho_uv)),
        )

    def swapped(self) -> "GaussPairMoment":
        """The same pair with the u and v slots exchanged."""
        return GaussPairMoment(self.mu_v, self.mu_u, self.sigma_v2,
                               self.sigma_u2, self.rho_uv)

    def inverse_covariance(self) -> tuple[float, float, float, float]:
        """Entries (a, b, c) of the inverted covariance [[a, c], [c, b]] and
        theta = b - c**2 / a, applying the variance floor before inversion."""
        var_u = max(self.sigma_u2, VAR_FLOOR)
        var_v = max(self.sigma_v2, VAR_FLOOR)
        det = var_u * var_v - self.rho_uv ** 2
        if det <= 0.0:
            raise DegenerateCovarianceError(
                f"covariance not invertible: det={det}")
        a = var_v / det
        b = var_u / det
        c = -self.rho_uv / det
        theta = b - c * c / a
        if theta <= 0.0:
            raise DegenerateCovarianceError(f"theta={theta} must be positive")
        return a, b, c, theta


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF, accurate to about one ulp via erfc."""
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x}")
    return 0.5 * math.erfc(-x / _SQRT2)


def _phi2_standard(h, k, r):
    """P(X <= h, Y <= k) for a standard bivariate normal with correlation r.

    Vectorized over same-shape arrays. Uses the correlation-integral identity

        Phi2(h, k, r) = Phi(h) Phi(k)
          + (1/2pi) * int_0^{asin r} exp(-(h^2 + k^2 - 2 h k sin t) / (2 cos^2 t)) dt

    whose integrand is smooth on the whole interval (including |r| -> 1), so
    Gauss-Legendre converges geometrically. The order is doubled until two
    successive refinements agree to < _QUAD_TOL.
    """
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    r = np.asarray(r, dtype=float)
    base = ndtr(h) * ndtr(k)
    alpha = np.arcsin(r)
    half = 0.5 * alpha
    integral = None
    hh = h[..., None]
    kk = k[..., None]
    for order in _QUAD_ORDERS:
        nodes, weights = _leggauss(order)
        t = half[..., None] * (nodes + 1.0)
        s = np.sin(t)
        c2 = np.cos(t)
        c2 *= c2
        expo = (hh * hh + kk * kk - 2.0 * hh * kk * s) / (-2.0 * c2)
        refined = (half / _TWO_PI) * (np.exp(expo) @ weights)
        if integral is not None and np.max(np.abs(refined - integral)) < _QUAD_TOL:
            integral = refined
            break
        integral = refined
    return np.clip(base + integral, 0.0, 1.0)


def bivariate_normal_cdf(x, mu, sigma) -> float:
    """CDF of the 2-d Gaussian N(mu, sigma), evaluated at x.

    sigma must be symmetric positive definite; a correlation coefficient at
    or marginally beyond +-1 is clamped to +-CORR_BOUND, anything worse
    raises DegenerateCovarianceError.
    """
    x = np.asarray(x, dtype=float).reshape(2)
    mu = np.asarray(mu, dtype=float).reshape(2)
    sigma = np.asarray(sigma, dtype=float).reshape(2, 2)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(mu))
            and np.all(np.isfinite(sigma))):
        raise ValueError("inputs must be finite")
    var_u = float(sigma[0, 0])
    var_v = float(sigma[1, 1])
    if var_u <= 0.0 or var_v <= 0.0:
        raise DegenerateCovarianceError(
            f"variances must be positive, got diag {var_u}, {var_v}")
    cov = 0.5 * (float(sigma[0, 1]) + float(sigma[1, 0]))
    corr = cov / math.sqrt(var_u * var_v)
    if abs(corr) > 1.0 + 1e-9:
        raise DegenerateCovarianceError(
            f"correlation {corr} outside [-1, 1]: sigma not PSD")
    corr = min(max(corr, -CORR_BOUND), CORR_BOUND)
    h = (x[0] - mu[0]) / math.sqrt(var_u)
    k = (x[1] - mu[1]) / math.sqrt(var_v)
    return float(_phi2_standard(h, k, corr))


def expected_sign(mu, sigma):
    """E{sgn g} for g ~ N(mu, sigma^2), namely 1 - 2 Phi(-mu / sigma).

    sigma = 0 is the deterministic limit sgn(mu), with sgn(0) = 0. Accepts
    scalars or broadcastable arrays; returns a float for scalar input.
    """
    mu_arr = np.asarray(mu, dtype=float)
    sig_arr = np.asarray(sigma, dtype=float)
    if not (np.all(np.isfinite(mu_arr)) and np.all(np.isfinite(sig_arr))):
        raise ValueError("mu and sigma must be finite")
    if np.any(sig_arr < 0.0):
        raise ValueError("sigma must be nonnegative")
    positive = sig_arr > 0.0
    # evaluated at |mu| and multiplied by sgn(mu): exactly odd in mu
    z = np.abs(mu_arr) / np.where(positive, sig_arr, 1.0)
    magnitude = np.where(positive, 1.0 - 2.0 * ndtr(-z), 1.0)
    out = np.sign(mu_arr) * magnitude
    if out.ndim == 0:
        return float(out)
    return out


def _broadcast_moments(mu_u, mu_v, var_u, var_v, cov):
    arrs = np.broadcast_arrays(
        np.asarray(mu_u, dtype=float), np.asarray(mu_v, dtype=float),
        np.asarray(var_u, dtype=float), np.asarray(var_v, dtype=float),
        np.asarray(cov, dtype=float))
    return [np.atleast_1d(a) for a in arrs]


def _sign_product_core(mu_u, mu_v, var_u, var_v, cov):
    """Vectorized E{sgn u * sgn v} with per-element degeneracy fallbacks."""
    mu_u, mu_v, var_u, var_v, cov = _broadcast_moments(
        mu_u, mu_v, var_u, var_v, cov)
    cov = _clamped_cov(var_u, var_v, cov)

    deg_u = var_u < VAR_FLOOR
    deg_v = var_v < VAR_FLOOR
    sig_u = np.sqrt(np.maximum(var_u, VAR_FLOOR))
    sig_v = np.sqrt(np.maximum(var_v, VAR_FLOOR))

    out = np.empty(mu_u.shape)
    general = ~(deg_u | deg_v)
    if np.any(general):
        hu = (mu_u / sig_u)[general]
        hv = (mu_v / sig_v)[general]
        r = (cov / (sig_u * sig_v))[general]
        term = _phi2_standard(-hu, -hv, r)
        term = term + _phi2_standard(hu, hv, r)
        term = term - _phi2_standard(-hu, hv, -r)
        term = term - _phi2_standard(hu, -hv, -r)
        out[general] = term
    only_u = deg_u & ~deg_v
    if np.any(only_u):
        out[only_u] = np.sign(mu_u[only_u]) * (
            1.0 - 2.0 * ndtr(-mu_v[only_u] / sig_v[only_u]))
    only_v = deg_v & ~deg_u
    if np.any(only_v):
        out[only_v] = np.sign(mu_v[only_v]) * (
            1.0 - 2.0 * ndtr(-mu_u[only_v] / sig_u[only_v]))
    both = deg_u & deg_v
    if np.any(both):
        out[both] = np.sign(mu_u[both]) * np.sign(mu_v[both])
    return np.clip(out, -1.0, 1.0)


def _value_sign_core(mu_u, mu_v, var_u, var_v, cov):
    """Vectorized E{u * sgn v} via the inverse-covariance closed form.

    Fallbacks: a deterministic v gives mu_u * sgn(mu_v); a deterministic u
    gives mu_u * E{sgn v}. The closed form itself stays finite for clamped
    near-singular covariances because only the det-free combinations
    c/a = -cov/var_v, a*det = var_v and theta = 1/var_v enter the result.
    """
    mu_u, mu_v, var_u, var_v, cov = _broadcast_moments(
        mu_u, mu_v, var_u, var_v, cov)
    cov = _clamped_cov(var_u, var_v, cov)

    deg_u = var_u < VAR_FLOOR
    deg_v = var_v < VAR_FLOOR

    out = np.empty(mu_u.shape)
    general = ~(deg_u | deg_v)
    if np.any(general):
        vu = np.maximum(var_u[general], VAR_FLOOR)
        vv = np.maximum(var_v[general], VAR_FLOOR)
        cg = cov[general]
        mug_u = mu_u[general]
        mug_v = mu_v[general]
        det = vu * vv - cg * cg
        a = vv / det
        b = vu / det
        c = -cg / det
        theta = b - c * c / a
        if np.any(theta <= 0.0):
            bad = np.flatnonzero(general.ravel())[np.flatnonzero(theta <= 0.0)]
            exc = DegenerateCovarianceError(
                f"non-positive theta after covariance clamping at flat "
                f"positions {bad[:4].tolist()}")
            exc.flat_indices = bad
            raise exc
        c_over_a = c / a
        sq_theta = np.sqrt(theta)
        odd = 1.0 - 2.0 * ndtr(-mug_v * sq_theta)
        brace = np.sqrt(_TWO_PI / theta) * (mug_u + c_over_a * mug_v) * odd
        brace -= c_over_a * np.sqrt(_TWO_PI / theta) * (
            np.sqrt(2.0 / (np.pi * theta)) * np.exp(-0.5 * mug_v ** 2 * theta)
            + mug_v * odd)
        out[general] = brace / np.sqrt(_TWO_PI * a * det)
    if np.any(deg_v):
        out[deg_v] = mu_u[deg_v] * np.sign(mu_v[deg_v])
    only_u = deg_u & ~deg_v
    if np.any(only_u):
        out[only_u] = mu_u[only_u] * (
            1.0 - 2.0 * ndtr(-mu_v[only_u] / np.sqrt(var_v[only_u])))
    return out


def expected_sign_product(pair: GaussPairMoment) -> float:
    """E{sgn u * sgn v} for the jointly Gaussian pair described by `pair`."""
    return float(_sign_product_core(pair.mu_u, pair.mu_v, pair.sigma_u2,
                                    pair.sigma_v2, pair.rho_uv)[0])


def expected_value_times_sign(pair: GaussPairMoment) -> float:
    """E{u * sgn v} for the jointly Gaussian pair described by `pair`."""
    return float(_value_sign_core(pair.mu_u, pair.mu_v, pair.sigma_u2,
                                  pair.sigma_v2, pair.rho_uv)[0])
