"""Numba kernels for the Monte Carlo ensemble (private).

Each run is fully independent: runs are dispatched with prange and every run
writes only its own output slices, so results are bit-reproducible for a
given seed regardless of thread count. Reduction over runs happens outside,
in a fixed order.

The fastmath flags permit reassociation/contraction (SIMD dot products) but
keep NaN and infinity semantics honest so overflow still propagates to the
outputs, where the caller checks for it.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

_FASTMATH = {"reassoc", "contract", "nsz", "arcp"}


@njit(cache=True, fastmath=_FASTMATH)
def _run_filter(xs, zs, w_star, lam, gamma, epsilon,
                record, wtraj, e2, ea2, msd,
                cap_instants, cap_i, cap_j, cap_out):
    """Simulate one l1-RLS run (compact update) over a tapped delay line.

    xs: input stream of length L + n_iters, first L samples are warm-up.
    zs: additive noise, one entry per update.
    If `record`, per-iteration channels are written to wtraj/e2/ea2/msd.
    cap_*: capture slots; slot s snapshots the weight-error pair
    (cap_i[s], cap_j[s]) right after update number cap_instants[s].
    """
    L = w_star.shape[0]
    n_iters = zs.shape[0]
    P = np.zeros((L, L))
    for i in range(L):
        P[i, i] = epsilon
    w = np.zeros(L)
    x = np.empty(L)
    Px = np.empty(L)
    sg = np.empty(L)
    inv_lam = 1.0 / lam
    n_caps = cap_instants.shape[0]
    for t in range(n_iters):
        for i in range(L):
            x[i] = xs[t + L - i]
        xw_star = 0.0
        yhat = 0.0
        for i in range(L):
            xw_star += x[i] * w_star[i]
            yhat += x[i] * w[i]
        y = xw_star + zs[t]
        e = y - yhat
        denom = lam
        for i in range(L):
            s = 0.0
            for j in range(L):
                s += P[i, j] * x[j]
            Px[i] = s
            denom += x[i] * s
        for i in range(L):
            ki = Px[i] / denom
            for j in range(L):
                P[i, j] = (P[i, j] - ki * Px[j]) * inv_lam
        for i in range(L):
            for j in range(i + 1, L):
                m = 0.5 * (P[i, j] + P[j, i])
                P[i, j] = m
                P[j, i] = m
        for i in range(L):
            if w[i] > 0.0:
                sg[i] = 1.0
            elif w[i] < 0.0:
                sg[i] = -1.0
            else:
                sg[i] = 0.0
        for i in range(L):
            s1 = 0.0
            s2 = 0.0
            for j in range(L):
                s1 += P[i, j] * x[j]
                s2 += P[i, j] * sg[j]
            w[i] += e * s1 + gamma * s2
        if record:
            m = 0.0
            for i in range(L):
                d = w[i] - w_star[i]
                wtraj[t, i] = w[i]
                m += d * d
            msd[t] = m
            e2[t] = e * e
            dev = yhat - xw_star
            ea2[t] = dev * dev
        for s in range(n_caps):
            if cap_instants[s] == t + 1:
                cap_out[s, 0] = w[cap_i[s]] - w_star[cap_i[s]]
                cap_out[s, 1] = w[cap_j[s]] - w_star[cap_j[s]]


@njit(cache=True, parallel=True, fastmath=_FASTMATH)
def _run_chunk(xs_chunk, zs_chunk, w_star, lam, gamma, epsilon,
               record, wtraj, e2, ea2, msd,
               cap_instants, cap_i, cap_j, cap_out):
    """Run an independent chunk of Monte Carlo runs in parallel."""
    C = zs_chunk.shape[0]
    for r in prange(C):
        _run_filter(xs_chunk[r], zs_chunk[r], w_star, lam, gamma, epsilon,
                    record, wtraj[r], e2[r], ea2[r], msd[r],
                    cap_instants, cap_i, cap_j, cap_out[r])
