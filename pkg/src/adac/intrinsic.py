"""Intrinsic rewards. Any implementation must return scores >= 0."""
from __future__ import annotations

from collections import defaultdict
from typing import Protocol

import numpy as np


class IntrinsicReward(Protocol):
    def update(self, obs: np.ndarray) -> None: ...

    def score(self, obs: np.ndarray) -> float: ...


class CountIntrinsic:
    """kappa / sqrt(N(cell) + 1) over a fixed grid of the observation box.

    Coordinates outside ``[low, high]`` fall into the edge bins.
    """

    def __init__(self, low, high, bins: int = 10, kappa: float = 0.1):
        self.low = np.asarray(low, dtype=np.float64)
        self.high = np.asarray(high, dtype=np.float64)
        if self.low.shape != self.high.shape or np.any(self.high <= self.low):
            raise ValueError("CountIntrinsic: need low < high per dimension")
        if kappa < 0:
            raise ValueError("CountIntrinsic: kappa must be non-negative")
        self.bins = bins
        self.kappa = kappa
        self.counts: dict[tuple, int] = defaultdict(int)

    def cell(self, obs) -> tuple:
        frac = (np.asarray(obs, dtype=np.float64) - self.low) / (self.high - self.low)
        return tuple(np.clip((frac * self.bins).astype(int), 0, self.bins - 1).tolist())

    def update(self, obs) -> None:
        self.counts[self.cell(obs)] += 1

    def score(self, obs) -> float:
        return self.kappa / np.sqrt(self.counts[self.cell(obs)] + 1)

    def __call__(self, obs) -> float:
        """Count the visit, then score it."""
        self.update(obs)
        return self.score(obs)


class ZeroIntrinsic:
    def update(self, obs) -> None:
        pass

    def score(self, obs) -> float:
        return 0.0

    def __call__(self, obs) -> float:
        return 0.0
