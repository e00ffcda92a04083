"""Transient mean and mean-square models of the l1-RLS filter.

The models advance three deterministic sequences: the expected time-averaged
input correlation E{Phi_n}, the expected weight-error vector E{wtilde_n},
and the weight-error correlation matrix K_n = E{wtilde_n wtilde_n^T}. The
sign nonlinearity of the zero attractor enters through per-entry Gaussian
sign moments (the weight-error entries are modeled as jointly Gaussian):
the univariate sign expectation drives the mean recursion, and the
sign-sign / value-sign pair moments build the two matrices feeding the
covariance recursion.

Everything here is deterministic; there is no randomness to seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DegenerateCovarianceError, LinearSolveError
from .gauss import _sign_product_core, _value_sign_core, expected_sign
from .records import TrajectoryRecord

__all__ = [
    "SystemSpec",
    "TheoryState",
    "init_theory",
    "expected_phi_step",
    "mean_step",
    "q1_matrix",
    "q2_matrix",
    "covariance_step",
    "mse_readout",
    "msd_readout",
    "run_theory",
]


@dataclass(frozen=True)
class SystemSpec:
    """Stationary identification setup the models are evaluated against."""

    w_star: np.ndarray     # ground-truth weights, length L
    R_x: np.ndarray        # input correlation matrix, L x L, SPD
    sigma_z2: float        # observation noise variance
    lam: float             # forgetting factor
    delta: float           # l1 regularization gain
    epsilon: float         # inverse-correlation initialization, Phi_init = I / epsilon

    def __post_init__(self):
        w = np.asarray(self.w_star, dtype=float)
        R = np.asarray(self.R_x, dtype=float)
        if w.ndim != 1:
            raise ValueError("w_star must be a vector")
        L = w.shape[0]
        if R.shape != (L, L):
            raise ValueError(f"R_x must be ({L}, {L}), got {R.shape}")
        if not np.allclose(R, R.T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(R).max())):
            raise ValueError("R_x must be symmetric")
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"forgetting factor must be in (0, 1), got {self.lam}")
        if self.delta < 0.0:
            raise ValueError(f"delta must be nonnegative, got {self.delta}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.sigma_z2 < 0.0:
            raise ValueError(f"sigma_z2 must be nonnegative, got {self.sigma_z2}")
        object.__setattr__(self, "w_star", w)
        object.__setattr__(self, "R_x", 0.5 * (R + R.T))

    @property
    def gamma(self) -> float:
        return self.delta * (self.lam - 1.0)

    @property
    def L(self) -> int:
        return self.w_star.shape[0]


@dataclass
class TheoryState:
    """Model state after `n` updates."""

    E_phi: np.ndarray      # E{Phi_n}, L x L
    E_wtilde: np.ndarray   # E{wtilde_n}, length L
    K: np.ndarray          # E{wtilde_n wtilde_n^T}, L x L
    n: int = 0


def init_theory(system: SystemSpec, w0=None) -> TheoryState:
    """Model state for a deterministic weight initialization (default zero).

    A deterministic start has exact moments: E{wtilde} = w0 - w_star and
    K = E{wtilde} E{wtilde}^T with zero variance everywhere.
    """
    w0 = np.zeros(system.L) if w0 is None else np.asarray(w0, dtype=float)
    wt = w0 - system.w_star
    return TheoryState(E_phi=np.eye(system.L) / system.epsilon,
                       E_wtilde=wt, K=np.outer(wt, wt), n=0)


def expected_phi_step(E_phi_prev, lam: float, R_x) -> np.ndarray:
    """Advance the expected input correlation: lam * E{Phi_prev} + R_x."""
    return lam * np.asarray(E_phi_prev, dtype=float) + np.asarray(R_x, dtype=float)


def _spd_solve(M, B):
    try:
        factor = cho_factor(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise LinearSolveError(f"expected correlation matrix not SPD: {exc}") from exc
    return cho_solve(factor, B, check_finite=False)


def _error_moments(E_wtilde, K, w_star):
    """Per-entry mean/variance of wtilde and its covariance matrix, with the
    variance clamped at zero against floating-point cancellation."""
    mu_wt = np.asarray(E_wtilde, dtype=float)
    K = np.asarray(K, dtype=float)
    var = np.maximum(np.diag(K) - mu_wt ** 2, 0.0)
    cov = K - np.outer(mu_wt, mu_wt)
    return mu_wt, var, cov, np.asarray(w_star, dtype=float)


def mean_step(state: TheoryState, system: SystemSpec, E_phi_prev) -> np.ndarray:
    """Next expected weight-error vector.

    Requires state.E_phi to hold the already-advanced E{Phi_n}; the state's
    E_wtilde and K are the previous step's moments. With gamma = 0 this is
    the plain RLS mean model.
    """
    mu_wt, var, _, w_star = _error_moments(state.E_wtilde, state.K, system.w_star)
    sign_vec = expected_sign(w_star + mu_wt, np.sqrt(var))
    rhs = system.lam * (np.asarray(E_phi_prev) @ state.E_wtilde) + system.gamma * sign_vec
    return _spd_solve(state.E_phi, rhs)


def q1_matrix(E_wtilde, K, w_star) -> np.ndarray:
    """Sign-sign moment matrix: entry (i, j) is E{sgn(w_star + wtilde)_i *
    sgn(w_star + wtilde)_j} under the joint-Gaussian model; the diagonal is
    identically 1."""
    mu_wt, var, cov, w_star = _error_moments(E_wtilde, K, w_star)
    L = mu_wt.shape[0]
    mu = w_star + mu_wt
    iu, ju = np.triu_indices(L, k=1)
    try:
        vals = _sign_product_core(mu[iu], mu[ju], var[iu], var[ju], cov[iu, ju])
    except DegenerateCovarianceError as exc:
        where = getattr(exc, "flat_indices", None)
        entry = f" at entry ({iu[where[0]]}, {ju[where[0]]})" if where is not None else ""
        raise DegenerateCovarianceError(
            f"sign-sign moment failed{entry}: {exc}") from exc
    Q = np.eye(L)
    Q[iu, ju] = vals
    Q[ju, iu] = vals
    return Q


def q2_matrix(E_wtilde, K, w_star) -> np.ndarray:
    """Value-sign moment matrix: entry (i, j) is E{wtilde_i *
    sgn(w_star + wtilde)_j} under the joint-Gaussian model, including the
    perfectly correlated diagonal (handled by the covariance clamp)."""
    mu_wt, var, cov, w_star = _error_moments(E_wtilde, K, w_star)
    L = mu_wt.shape[0]
    mu_v = w_star + mu_wt
    mu_u_grid = np.broadcast_to(mu_wt[:, None], (L, L))
    mu_v_grid = np.broadcast_to(mu_v[None, :], (L, L))
    var_u_grid = np.broadcast_to(var[:, None], (L, L))
    var_v_grid = np.broadcast_to(var[None, :], (L, L))
    try:
        vals = _value_sign_core(mu_u_grid.ravel(), mu_v_grid.ravel(),
                                var_u_grid.ravel(), var_v_grid.ravel(),
                                cov.ravel())
    except DegenerateCovarianceError as exc:
        where = getattr(exc, "flat_indices", None)
        entry = f" at entry {divmod(int(where[0]), L)}" if where is not None else ""
        raise DegenerateCovarianceError(
            f"value-sign moment failed{entry}: {exc}") from exc
    return vals.reshape(L, L)


def _psd_project(K: np.ndarray) -> np.ndarray:
    """Symmetrize and clip negative eigenvalues at zero."""
    K = 0.5 * (K + K.T)
    vals, vecs = np.linalg.eigh(K)
    if vals[0] >= 0.0:
        return K
    vals = np.maximum(vals, 0.0)
    return (vecs * vals) @ vecs.T


def covariance_step(state: TheoryState, system: SystemSpec, E_phi_prev) -> np.ndarray:
    """Next weight-error correlation matrix K.

    The sign-moment matrices are built from the previous step's E_wtilde and
    K (still held in `state`); state.E_phi must hold the advanced E{Phi_n}.
    With gamma = 0 the sign-moment terms vanish exactly and this is the
    plain RLS mean-square model.
    """
    E_phi_prev = np.asarray(E_phi_prev, dtype=float)
    lam, gamma = system.lam, system.gamma
    inner = system.sigma_z2 * system.R_x
    if gamma != 0.0:
        Q1 = q1_matrix(state.E_wtilde, state.K, system.w_star)
        Q2 = q2_matrix(state.E_wtilde, state.K, system.w_star)
        cross = E_phi_prev @ Q2
        inner = inner + gamma * gamma * Q1 + lam * gamma * (cross + cross.T)
    try:
        factor = cho_factor(state.E_phi, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise LinearSolveError(f"expected correlation matrix not SPD: {exc}") from exc
    M = cho_solve(factor, E_phi_prev, check_finite=False)       # Phi_n^-1 Phi_{n-1}
    half = cho_solve(factor, inner, check_finite=False)         # Phi_n^-1 inner
    sandwich = cho_solve(factor, half.T, check_finite=False).T  # Phi_n^-1 inner Phi_n^-1
    K = lam * lam * (M @ state.K @ M.T) + sandwich
    return _psd_project(K)


def mse_readout(K_prev, R_x, sigma_z2: float) -> tuple[float, float]:
    """A priori (mse, emse) of the update following state K_prev:
    mse = sigma_z2 + tr(R_x K_prev), emse = tr(R_x K_prev)."""
    emse = float(np.einsum("ij,ji->", np.asarray(R_x), np.asarray(K_prev)))
    emse = max(emse, 0.0)
    return sigma_z2 + emse, emse


def msd_readout(K) -> float:
    """Mean-square deviation tr(K)."""
    return float(np.trace(np.asarray(K)))


def run_theory(system: SystemSpec, n_iters: int, w0=None) -> TrajectoryRecord:
    """Advance the mean and mean-square models for `n_iters` updates.

    Returns the theoretical learning curves with the same row convention as
    the empirical record: row t holds the post-update weight statistics and
    the a priori error statistics of update t+1.
    """
    if n_iters < 1:
        raise ValueError(f"n_iters must be >= 1, got {n_iters}")
    state = init_theory(system, w0)
    L = system.L
    mean_w = np.empty((n_iters, L))
    msd = np.empty(n_iters)
    mse = np.empty(n_iters)
    emse = np.empty(n_iters)
    for t in range(n_iters):
        try:
            E_phi_prev = state.E_phi
            state.E_phi = expected_phi_step(E_phi_prev, system.lam, system.R_x)
            mse[t], emse[t] = mse_readout(state.K, system.R_x, system.sigma_z2)
            new_wt = mean_step(state, system, E_phi_prev)
            new_K = covariance_step(state, system, E_phi_prev)
        except (LinearSolveError, DegenerateCovarianceError) as exc:
            raise type(exc)(f"model recursion failed at iteration {t + 1}: {exc}") from exc
        state.E_wtilde = new_wt
        state.K = new_K
        state.n += 1
        mean_w[t] = system.w_star + state.E_wtilde
        msd[t] = msd_readout(state.K)
    return TrajectoryRecord(kind="theoretical", mean_w=mean_w, msd=msd,
                            mse=mse, emse=emse)
