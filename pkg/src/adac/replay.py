from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Transition:
    s: np.ndarray
    a: np.ndarray
    r: float
    r_in: float
    s_next: np.ndarray
    done: bool

    def __post_init__(self):
        if not self.r_in >= 0.0:
            raise ValueError(f"intrinsic reward must be non-negative, got {self.r_in}")


@dataclass
class Batch:
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    r_in: np.ndarray
    s_next: np.ndarray
    done: np.ndarray
    idx: np.ndarray


class ReplayBuffer:
    """Fixed-capacity ring buffer with uniform sampling (with replacement)."""

    def __init__(self, capacity: int, obs_dim: int, action_dim: int):
        self.capacity = capacity
        self.s = np.zeros((capacity, obs_dim))
        self.a = np.zeros((capacity, action_dim))
        self.r = np.zeros(capacity)
        self.r_in = np.zeros(capacity)
        self.s_next = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity)
        self.ptr = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def add(self, t: Transition) -> None:
        i = self.ptr
        self.s[i], self.a[i], self.r[i], self.r_in[i] = t.s, t.a, t.r, t.r_in
        self.s_next[i], self.done[i] = t.s_next, float(t.done)
        self.ptr = (self.ptr + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, n: int, rng: np.random.Generator) -> Batch:
        if self.size == 0:
            raise ValueError("cannot sample from an empty replay buffer")
        idx = rng.integers(0, self.size, size=n)
        return Batch(self.s[idx], self.a[idx], self.r[idx], self.r_in[idx], self.s_next[idx], self.done[idx], idx)
