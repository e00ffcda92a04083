"""Monte Carlo ground truth: AR(1) input, sparse linear system, ensembles.

A run r of an ensemble draws its randomness from a child generator spawned
as SeedSequence(entropy=seed, spawn_key=(r,)), so runs are independent,
reproducible, and order-free. Ensemble averages use compensated (Kahan)
summation in fixed run order; any other order agrees to ~1e-15 relative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz
from scipy.signal import lfilter

from ._kernels import _run_chunk
from .errors import ConfigurationError, DegenerateSampleError, NumericalFailureError
from .filters import init_filter, step_compact
from .normality import henze_zirkler_statistic
from .records import TrajectoryRecord

__all__ = [
    "ExperimentConfig",
    "PairSampleSet",
    "NormalityDecision",
    "sparse32_weights",
    "sparse32_config",
    "ar1_stream",
    "rx_toeplitz",
    "simulate_run",
    "run_ensemble",
    "normality_audit",
]

# Runs processed per kernel call; bounds memory at a few tens of MB while
# keeping the parallel loop busy.
_CHUNK_RUNS = 64


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one ensemble experiment."""

    L: int
    lam: float
    delta: float
    epsilon: float
    sigma_z2: float
    rho: float
    sigma_s2: float
    w_star: tuple[float, ...]
    n_iters: int
    n_runs: int
    seed: int
    capture_instants: tuple[int, ...] = ()
    capture_pairs: tuple[tuple[int, int], ...] = ()
    capture_samples: int = 0

    def __post_init__(self):
        if self.L < 1:
            raise ConfigurationError(f"L must be >= 1, got {self.L}")
        if not 0.0 < self.lam < 1.0:
            raise ConfigurationError(f"lambda must be in (0, 1), got {self.lam}")
        if self.delta < 0.0:
            raise ConfigurationError(f"delta must be nonnegative, got {self.delta}")
        if self.epsilon <= 0.0:
            raise ConfigurationError(f"epsilon must be positive, got {self.epsilon}")
        if self.sigma_z2 < 0.0:
            raise ConfigurationError(f"sigma_z2 must be nonnegative, got {self.sigma_z2}")
        if not abs(self.rho) < 1.0:
            raise ConfigurationError(f"rho must satisfy |rho| < 1, got {self.rho}")
        if self.sigma_s2 <= 0.0:
            raise ConfigurationError(f"sigma_s2 must be positive, got {self.sigma_s2}")
        w = tuple(float(v) for v in self.w_star)
        if len(w) != self.L:
            raise ConfigurationError(
                f"w_star must have length L={self.L}, got {len(w)}")
        if not all(math.isfinite(v) for v in w):
            raise ConfigurationError("w_star must be finite")
        object.__setattr__(self, "w_star", w)
        if self.n_iters < 1:
            raise ConfigurationError(f"n_iters must be >= 1, got {self.n_iters}")
        if self.n_runs < 1:
            raise ConfigurationError(f"n_runs must be >= 1, got {self.n_runs}")
        instants = tuple(int(v) for v in self.capture_instants)
        pairs = tuple((int(i), int(j)) for i, j in self.capture_pairs)
        if len(instants) != len(pairs):
            raise ConfigurationError(
                "capture_instants and capture_pairs must pair up one-to-one")
        for inst in instants:
            if not 1 <= inst <= self.n_iters:
                raise ConfigurationError(
                    f"capture instant {inst} outside [1, {self.n_iters}]")
        for i, j in pairs:
            if not (1 <= i <= self.L and 1 <= j <= self.L):
                raise ConfigurationError(
                    f"capture pair ({i}, {j}) outside [1, {self.L}]")
        if instants and self.capture_samples < 1:
            raise ConfigurationError("capture_samples must be >= 1 when capturing")
        object.__setattr__(self, "capture_instants", instants)
        object.__setattr__(self, "capture_pairs", pairs)

    @property
    def sigma_x2(self) -> float:
        """Stationary input variance sigma_s2 / (1 - rho^2)."""
        return self.sigma_s2 / (1.0 - self.rho * self.rho)

    @property
    def gamma(self) -> float:
        return self.delta * (self.lam - 1.0)

    def w_star_array(self) -> np.ndarray:
        return np.asarray(self.w_star, dtype=float)


@dataclass
class PairSampleSet:
    """Weight-error pair snapshots across independent runs.

    Row r is ([wtilde]_i, [wtilde]_j) from run r at the capture instant;
    rows are i.i.d. across runs by construction, one row per run.
    """

    instant: int
    pair: tuple[int, int]          # 1-based weight indices
    samples: np.ndarray            # (capture_samples, 2)


@dataclass
class NormalityDecision:
    """Outcome of the normality check for one captured pair set."""

    instant: int
    pair: tuple[int, int]
    n_samples: int
    statistic: float | None = None
    p_value: float | None = None
    reject_at_0_05: bool | None = None
    error: str | None = None


def sparse32_weights() -> np.ndarray:
    """The 32-tap sparse benchmark response: five decaying positive taps,
    22 zeros, then the mirrored negative taps."""
    head = [0.9, 0.7, 0.5, 0.3, 0.1]
    return np.array(head + [0.0] * 22 + [-v for v in reversed(head)])


def sparse32_config(**overrides) -> ExperimentConfig:
    """Benchmark configuration for the 32-tap sparse identification setup
    (AR(1) input with unit stationary variance, 500-run averaging)."""
    base = dict(
        L=32,
        lam=0.995,
        delta=0.25,
        epsilon=0.1,
        sigma_z2=0.09,
        rho=0.6,
        sigma_s2=0.64,
        w_star=tuple(sparse32_weights()),
        n_iters=2000,
        n_runs=500,
        seed=1729,
        capture_instants=(200, 1500),
        capture_pairs=((2, 10), (13, 25)),
        capture_samples=5000,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def _child_rng(seed: int, run: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(run,)))


def _ar1_from_rng(rng: np.random.Generator, rho: float, sigma_s2: float,
                  n: int) -> np.ndarray:
    """AR(1) stream of length n started from the stationary distribution."""
    sigma_x = math.sqrt(sigma_s2 / (1.0 - rho * rho))
    drive = np.empty(n)
    drive[0] = sigma_x * rng.standard_normal()
    if n > 1:
        drive[1:] = math.sqrt(sigma_s2) * rng.standard_normal(n - 1)
    return lfilter([1.0], [1.0, -rho], drive)


def ar1_stream(rho: float, sigma_s2: float, n: int, seed: int) -> np.ndarray:
    """Seeded AR(1) sequence x_t = rho x_{t-1} + s_t with stationary start."""
    if not abs(rho) < 1.0:
        raise ConfigurationError(f"rho must satisfy |rho| < 1, got {rho}")
    if sigma_s2 <= 0.0:
        raise ConfigurationError(f"sigma_s2 must be positive, got {sigma_s2}")
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}")
    return _ar1_from_rng(np.random.default_rng(seed), rho, sigma_s2, n)


def rx_toeplitz(rho: float, sigma_x2: float, L: int) -> np.ndarray:
    """Correlation matrix of an AR(1) tapped delay line:
    [R]_{ij} = sigma_x2 * rho^|i-j|."""
    if not abs(rho) < 1.0:
        raise ConfigurationError(f"rho must satisfy |rho| < 1, got {rho}")
    return toeplitz(sigma_x2 * rho ** np.arange(L))


def _draw_run_inputs(config: ExperimentConfig, run: int) -> tuple[np.ndarray, np.ndarray]:
    """Input stream (warm-up plus live samples) and noise for one run."""
    rng = _child_rng(config.seed, run)
    xs = _ar1_from_rng(rng, config.rho, config.sigma_s2,
                       config.L + config.n_iters)
    zs = math.sqrt(config.sigma_z2) * rng.standard_normal(config.n_iters)
    return xs, zs


def simulate_run(config: ExperimentConfig, run: int):
    """One seeded run via the step-level filter (reference implementation).

    Returns (wtraj, e2, ea2, msd) with one row/entry per update. The fast
    ensemble kernel is validated against this path in the tests.
    """
    xs, zs = _draw_run_inputs(config, run)
    w_star = config.w_star_array()
    L, n = config.L, config.n_iters
    state = init_filter(L, config.lam, config.delta, config.epsilon)
    wtraj = np.empty((n, L))
    e2 = np.empty(n)
    ea2 = np.empty(n)
    msd = np.empty(n)
    for t in range(n):
        x = xs[t + 1:t + 1 + L][::-1]
        xw_star = float(x @ w_star)
        y = xw_star + zs[t]
        dev = float(x @ state.w) - xw_star
        try:
            state, out = step_compact(state, x, y)
        except NumericalFailureError as exc:
            raise NumericalFailureError("ensemble run diverged",
                                        iteration=exc.iteration, run=run) from exc
        wtraj[t] = state.w
        e2[t] = out.e * out.e
        ea2[t] = dev * dev
        msd[t] = float(np.sum((state.w - w_star) ** 2))
    return wtraj, e2, ea2, msd


class _KahanMean:
    """Compensated accumulator; the mean is independent of add() order to
    ~1e-15 relative."""

    def __init__(self, shape):
        self._sum = np.zeros(shape)
        self._comp = np.zeros(shape)
        self.count = 0

    def add(self, value):
        y = value - self._comp
        t = self._sum + y
        self._comp = (t - self._sum) - y
        self._sum = t
        self.count += 1

    def mean(self):
        return self._sum / self.count


def run_ensemble(config: ExperimentConfig, *, trajectories: bool = True
                 ) -> tuple[TrajectoryRecord | None, list[PairSampleSet]]:
    """Run the full seeded ensemble.

    Returns the empirical learning curves (averaged over all runs) and one
    PairSampleSet per configured capture slot, filled from the first
    `capture_samples` runs. With trajectories=False only the captures are
    produced, which is much faster for large normality ensembles.
    """
    capture = bool(config.capture_instants)
    if capture and config.capture_samples > config.n_runs:
        raise ConfigurationError(
            f"cannot collect {config.capture_samples} capture samples from "
            f"{config.n_runs} runs")
    if not trajectories and not capture:
        raise ConfigurationError("nothing to compute: no trajectories, no captures")

    L, n = config.L, config.n_iters
    w_star = config.w_star_array()
    n_caps = len(config.capture_instants)
    cap_instants = np.asarray(config.capture_instants, dtype=np.int64)
    cap_i = np.asarray([p[0] - 1 for p in config.capture_pairs], dtype=np.int64)
    cap_j = np.asarray([p[1] - 1 for p in config.capture_pairs], dtype=np.int64)
    cap_store = np.empty((n_caps, config.capture_samples, 2)) if capture else None

    acc_w = _KahanMean((n, L)) if trajectories else None
    acc_msd = _KahanMean(n) if trajectories else None
    acc_e2 = _KahanMean(n) if trajectories else None
    acc_ea2 = _KahanMean(n) if trajectories else None

    done = 0
    while done < config.n_runs:
        C = min(_CHUNK_RUNS, config.n_runs - done)
        xs_chunk = np.empty((C, L + n))
        zs_chunk = np.empty((C, n))
        for r in range(C):
            xs_chunk[r], zs_chunk[r] = _draw_run_inputs(config, done + r)
        if trajectories:
            wtraj = np.empty((C, n, L))
            e2 = np.empty((C, n))
            ea2 = np.empty((C, n))
            msd = np.empty((C, n))
        else:
            wtraj = np.empty((C, 0, L))
            e2 = np.empty((C, 0))
            ea2 = np.empty((C, 0))
            msd = np.empty((C, 0))
        cap_out = np.full((C, n_caps, 2), np.nan) if capture else np.empty((C, 0, 2))
        _run_chunk(xs_chunk, zs_chunk, w_star, config.lam, config.gamma,
                   config.epsilon, trajectories, wtraj, e2, ea2, msd,
                   cap_instants, cap_i, cap_j, cap_out)
        for r in range(C):
            run = done + r
            if trajectories:
                if not np.isfinite(msd[r]).all():
                    bad = int(np.argmin(np.isfinite(msd[r])))
                    raise NumericalFailureError("ensemble run diverged",
                                                iteration=bad, run=run)
                acc_w.add(wtraj[r])
                acc_msd.add(msd[r])
                acc_e2.add(e2[r])
                acc_ea2.add(ea2[r])
            if capture and run < config.capture_samples:
                if not np.isfinite(cap_out[r]).all():
                    raise NumericalFailureError("capture produced non-finite values",
                                                run=run)
                cap_store[:, run, :] = cap_out[r]
        done += C

    record = None
    if trajectories:
        record = TrajectoryRecord(kind="empirical", mean_w=acc_w.mean(),
                                  msd=acc_msd.mean(), mse=acc_e2.mean(),
                                  emse=acc_ea2.mean())
    sets = []
    if capture:
        for s in range(n_caps):
            sets.append(PairSampleSet(instant=int(cap_instants[s]),
                                      pair=config.capture_pairs[s],
                                      samples=cap_store[s].copy()))
    return record, sets


def normality_audit(pair_sets, significance: float = 0.05) -> list[NormalityDecision]:
    """Apply the multivariate normality test to each captured pair set.

    Degenerate samples are flagged in the report instead of aborting the
    audit. Each set must contain at least 100 samples.
    """
    decisions = []
    for ps in pair_sets:
        n_samples = ps.samples.shape[0]
        if n_samples < 100:
            raise ConfigurationError(
                f"normality audit needs >= 100 samples, got {n_samples} "
                f"for pair {ps.pair} at n={ps.instant}")
        entry = NormalityDecision(instant=ps.instant, pair=ps.pair,
                                  n_samples=n_samples)
        try:
            res = henze_zirkler_statistic(ps.samples, significance=significance)
        except DegenerateSampleError as exc:
            entry.error = str(exc)
        else:
            entry.statistic = res.statistic
            entry.p_value = res.p_value
            entry.reject_at_0_05 = res.reject_at_0_05
        decisions.append(entry)
    return decisions
