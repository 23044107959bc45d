"""Running per-channel observation statistics (Welford's algorithm)."""

from __future__ import annotations

import numpy as np


class RunningNormalizer:
    """Single-pass mean/variance tracker; applying with count 0 is the identity."""

    EPS = 1e-8

    def __init__(self, dim: int):
        self.dim = int(dim)
        self.count = 0.0
        self.mean = np.zeros(self.dim)
        self.m2 = np.zeros(self.dim)

    def update(self, obs) -> None:
        x = np.asarray(obs, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected ({self.dim},) observation, got {x.shape}")
        self.count += 1.0
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    def update_batch(self, obs_batch) -> None:
        for row in np.asarray(obs_batch, dtype=float):
            self.update(row)

    @property
    def variance(self) -> np.ndarray:
        if self.count < 1.0:
            return np.ones(self.dim)
        return self.m2 / self.count

    def apply(self, obs) -> np.ndarray:
        x = np.asarray(obs, dtype=float)
        if self.count < 1.0:
            return x.copy()
        return (x - self.mean) / np.sqrt(self.variance + self.EPS)

    def copy(self) -> "RunningNormalizer":
        out = RunningNormalizer(self.dim)
        out.count = self.count
        out.mean = self.mean.copy()
        out.m2 = self.m2.copy()
        return out

    def state(self) -> tuple[float, np.ndarray, np.ndarray]:
        return self.count, self.mean.copy(), self.m2.copy()

    @staticmethod
    def from_state(dim: int, state) -> "RunningNormalizer":
        out = RunningNormalizer(dim)
        count, mean, m2 = state
        out.count = float(count)
        out.mean = np.asarray(mean, dtype=float).copy()
        out.m2 = np.asarray(m2, dtype=float).copy()
        return out
