"""Henze-Zirkler multivariate normality test.

Standard formulation: the statistic is a weighted L2 distance between the
empirical characteristic function of the standardized sample and the
standard Gaussian one, with smoothing parameter

    beta = ((n * (2 d + 1)) / 4) ** (1 / (d + 4)) / sqrt(2),

and the null distribution is approximated as lognormal, rejecting on the
upper tail. The function is deterministic given the sample.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import ndtr

from .errors import DegenerateSampleError

__all__ = ["HenzeZirklerResult", "henze_zirkler_statistic"]

# Cap on the number of pairwise-distance matrix elements held at once.
_BLOCK_ELEMENTS = 2 ** 22


class HenzeZirklerResult(NamedTuple):
    statistic: float
    p_value: float
    reject_at_0_05: bool


def henze_zirkler_statistic(samples, significance: float = 0.05) -> HenzeZirklerResult:
    """Test a (rows x cols) sample matrix for multivariate normality.

    Requires rows >= cols + 1 and a nonsingular sample covariance; raises
    DegenerateSampleError otherwise. Rejection compares the lognormal
    approximation of the null against the given significance level.
    """
    X = np.asarray(samples, dtype=float)
    if X.ndim != 2:
        raise DegenerateSampleError(f"expected a 2-d sample matrix, got ndim={X.ndim}")
    n, d = X.shape
    if n < d + 1:
        raise DegenerateSampleError(f"need at least {d + 1} rows for dimension {d}, got {n}")
    if not np.all(np.isfinite(X)):
        raise DegenerateSampleError("sample contains non-finite values")

    centered = X - X.mean(axis=0)
    cov = centered.T @ centered / n
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise DegenerateSampleError("singular sample covariance") from exc
    # Whitened deviations: Mahalanobis distances become plain squared norms.
    y = solve_triangular(chol, centered.T, lower=True, check_finite=False).T
    sq = np.einsum("ij,ij->i", y, y)

    beta = ((n * (2.0 * d + 1.0)) / 4.0) ** (1.0 / (d + 4.0)) / math.sqrt(2.0)
    b2 = beta * beta

    pair_sum = 0.0
    block = max(1, _BLOCK_ELEMENTS // n)
    for start in range(0, n, block):
        stop = min(start + block, n)
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * (y[start:stop] @ y.T)
        np.maximum(d2, 0.0, out=d2)
        d2 *= -0.5 * b2
        np.exp(d2, out=d2)
        pair_sum += float(d2.sum())
    one_sum = float(np.exp(-b2 / (2.0 * (1.0 + b2)) * sq).sum())

    stat = n * (pair_sum / n ** 2
                - 2.0 * (1.0 + b2) ** (-d / 2.0) * one_sum / n
                + (1.0 + 2.0 * b2) ** (-d / 2.0))

    # Lognormal approximation of the null distribution.
    a = 1.0 + 2.0 * b2
    wb = (1.0 + b2) * (1.0 + 3.0 * b2)
    mu = 1.0 - a ** (-d / 2.0) * (
        1.0 + d * b2 / a + d * (d + 2.0) * b2 ** 2 / (2.0 * a ** 2))
    si2 = (2.0 * (1.0 + 4.0 * b2) ** (-d / 2.0)
           + 2.0 * a ** (-d) * (1.0 + 2.0 * d * b2 ** 2 / a ** 2
                                + 3.0 * d * (d + 2.0) * b2 ** 4 / (4.0 * a ** 4))
           - 4.0 * wb ** (-d / 2.0) * (1.0 + 3.0 * d * b2 ** 2 / (2.0 * wb)
                                       + d * (d + 2.0) * b2 ** 4 / (2.0 * wb ** 2)))
    log_mu = math.log(math.sqrt(mu ** 4 / (si2 + mu ** 2)))
    log_sd = math.sqrt(math.log1p(si2 / mu ** 2))
    z = (math.log(max(stat, 1e-300)) - log_mu) / log_sd
    p_value = float(1.0 - ndtr(z))
    return HenzeZirklerResult(float(stat), p_value, p_value < significance)
