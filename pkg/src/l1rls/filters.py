"""Recursive least-squares adaptive filters with an l1 zero-attractor penalty.

Two algebraically equivalent updates are provided. The three-equation form
computes the gain, routes the attractor through the gain projector, then
updates the inverse correlation. The compact form updates the inverse
correlation first and applies both the error correction and the attractor
through it. Keeping both permits step-by-step equivalence checks; with a
zero attractor gain both reduce to the classical exponentially weighted RLS.

FilterState is single-owner mutable state: steps are sequential, but
distinct instances are independent and may run on distinct threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericalFailureError

__all__ = [
    "FilterState",
    "StepOutput",
    "init_filter",
    "step_original",
    "step_compact",
    "phi_recursion_check",
]


@dataclass
class FilterState:
    """State of one adaptive filter instance."""

    w: np.ndarray    # weight estimate, length L
    P: np.ndarray    # inverse time-averaged input correlation, L x L
    lam: float       # forgetting factor, 0 < lam < 1
    gamma: float     # zero-attractor gain, delta * (lam - 1) <= 0
    n: int = 0       # completed update count


@dataclass
class StepOutput:
    """Per-step byproducts: the a priori error is computed with the
    pre-update weights, before anything else changes."""

    e: float
    w_next: np.ndarray
    k: np.ndarray | None = None   # gain vector (three-equation form only)


def init_filter(L: int, lam: float, delta: float, epsilon: float,
                w0=None) -> FilterState:
    """Fresh filter state with P = epsilon * I and gamma = delta * (lam - 1)."""
    if L < 1:
        raise ConfigurationError(f"L must be >= 1, got {L}")
    if not 0.0 < lam < 1.0:
        raise ConfigurationError(f"forgetting factor must be in (0, 1), got {lam}")
    if delta < 0.0:
        raise ConfigurationError(f"delta must be nonnegative, got {delta}")
    if epsilon <= 0.0:
        raise ConfigurationError(f"epsilon must be positive, got {epsilon}")
    if w0 is None:
        w = np.zeros(L)
    else:
        w = np.array(w0, dtype=float)
        if w.shape != (L,):
            raise ConfigurationError(f"w0 must have shape ({L},), got {w.shape}")
    return FilterState(w=w, P=epsilon * np.eye(L), lam=float(lam),
                       gamma=float(delta) * (float(lam) - 1.0), n=0)


def _checked(w_next: np.ndarray, P_next: np.ndarray, iteration: int) -> None:
    if not (np.isfinite(w_next).all() and np.isfinite(P_next).all()):
        raise NumericalFailureError("non-finite filter update", iteration=iteration)


def step_original(state: FilterState, x, y: float) -> tuple[FilterState, StepOutput]:
    """One update in the three-equation form.

    Gain k from the old P, weight update with the attractor passed through
    (I - k x^T) P, then the rank-one inverse-correlation update.
    """
    x = np.asarray(x, dtype=float)
    P = state.P
    lam = state.lam
    Px = P @ x
    k = Px / (lam + float(x @ Px))
    e = float(y) - float(x @ state.w)
    Ps = P @ np.sign(state.w)
    attractor = (state.gamma / lam) * (Ps - k * float(x @ Ps))
    w_next = state.w + e * k + attractor
    P_next = (P - np.outer(k, Px)) / lam
    P_next = 0.5 * (P_next + P_next.T)
    _checked(w_next, P_next, state.n)
    new_state = FilterState(w=w_next, P=P_next, lam=lam, gamma=state.gamma,
                            n=state.n + 1)
    return new_state, StepOutput(e=e, w_next=w_next, k=k)


def step_compact(state: FilterState, x, y: float) -> tuple[FilterState, StepOutput]:
    """One update in the compact form.

    The error is computed with the pre-update weights, P is advanced first,
    and the weight update applies both corrections through the new P; the
    sign term also uses the pre-update weights. Any other ordering breaks
    the equivalence with the three-equation form.
    """
    x = np.asarray(x, dtype=float)
    P = state.P
    lam = state.lam
    e = float(y) - float(x @ state.w)
    Px = P @ x
    k = Px / (lam + float(x @ Px))
    P_next = (P - np.outer(k, Px)) / lam
    P_next = 0.5 * (P_next + P_next.T)
    w_next = state.w + e * (P_next @ x) + state.gamma * (P_next @ np.sign(state.w))
    _checked(w_next, P_next, state.n)
    new_state = FilterState(w=w_next, P=P_next, lam=lam, gamma=state.gamma,
                            n=state.n + 1)
    return new_state, StepOutput(e=e, w_next=w_next, k=None)


def phi_recursion_check(states, xs, epsilon: float, lam: float) -> float:
    """Diagnostic: max over steps of ||P_n Phi_n - I||_inf.

    Phi is rebuilt independently from its defining recursion
    Phi_n = lam * Phi_{n-1} + x_n x_n^T starting at Phi = I / epsilon;
    `states` holds the post-step filter states aligned with `xs`.
    """
    states = list(states)
    if not states:
        return 0.0
    L = states[0].P.shape[0]
    phi = np.eye(L) / epsilon
    eye = np.eye(L)
    worst = 0.0
    for st, x in zip(states, xs):
        x = np.asarray(x, dtype=float)
        phi = lam * phi + np.outer(x, x)
        worst = max(worst, float(np.abs(st.P @ phi - eye).max()))
    return worst
