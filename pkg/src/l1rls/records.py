"""Per-iteration trajectory channels shared by the simulator and the models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["TrajectoryRecord"]


@dataclass
class TrajectoryRecord:
    """Learning curves over one experiment horizon.

    Row t (0-based) describes update t+1: `mean_w` and `msd` are ensemble
    (or model) statistics of the weights after that update, while `mse` and
    `emse` describe the a priori error of that update, so they lag the
    weight channels by one state. The deterministic pre-update start (zero
    weights) is not a row.
    """

    kind: str                 # "empirical" or "theoretical"
    mean_w: np.ndarray        # (n_iters, L)
    msd: np.ndarray           # (n_iters,)
    mse: np.ndarray           # (n_iters,)
    emse: np.ndarray          # (n_iters,)

    def __post_init__(self):
        if self.kind not in ("empirical", "theoretical"):
            raise ValueError(f"unknown record kind {self.kind!r}")
        self.mean_w = np.asarray(self.mean_w, dtype=float)
        if self.mean_w.ndim != 2:
            raise ValueError("mean_w must be (n_iters, L)")
        n = self.mean_w.shape[0]
        for name in ("msd", "mse", "emse"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
            if np.any(arr < 0.0):
                raise ValueError(f"{name} must be nonnegative")
            setattr(self, name, arr)

    @property
    def n_iters(self) -> int:
        return self.mean_w.shape[0]

    @property
    def n_taps(self) -> int:
        return self.mean_w.shape[1]

    @property
    def iterations(self) -> np.ndarray:
        """1-based update counts, one per row."""
        return np.arange(1, self.n_iters + 1)
