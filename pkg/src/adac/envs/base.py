from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class StepResult:
    obs: np.ndarray
    reward: float
    done: bool
    # True when the episode was cut by the step limit rather than a terminal state
    truncated: bool = False


class EpisodeOver(RuntimeError):
    pass


class Env:
    """Seeded single-threaded environment with a fixed step limit.

    Subclasses implement ``_reset_state``, ``_obs`` and ``_transition``.
    """

    id: str = ""
    obs_dim: int = 0
    action_dim: int = 1
    action_low: float = -1.0
    action_high: float = 1.0
    max_steps: int = 200
    # nominal observation box, used to grid states for count-based bonuses
    obs_low: tuple = ()
    obs_high: tuple = ()

    def __init__(self, seed: int | None = None):
        self.rng = np.random.default_rng(seed)
        self.state: np.ndarray | None = None
        self.t = 0
        self.done = True

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.state = self._reset_state()
        self.t = 0
        self.done = False
        return self._obs()

    def step(self, action) -> StepResult:
        if self.done:
            raise EpisodeOver(f"{self.id}: step() called on a finished episode; call reset()")
        a = np.atleast_1d(np.asarray(action, dtype=np.float64))
        if a.shape != (self.action_dim,):
            raise ValueError(f"{self.id}: action must have shape ({self.action_dim},), got {a.shape}")
        clipped = np.clip(a, self.action_low, self.action_high)
        if not np.array_equal(clipped, a):
            log.debug("%s: action %s clipped to [%s, %s]", self.id, a, self.action_low, self.action_high)
        reward, terminal = self._transition(clipped)
        self.t += 1
        truncated = not terminal and self.t >= self.max_steps
        self.done = terminal or truncated
        return StepResult(self._obs(), float(reward), self.done, truncated)

    def _reset_state(self) -> np.ndarray:
        raise NotImplementedError

    def _obs(self) -> np.ndarray:
        raise NotImplementedError

    def _transition(self, a: np.ndarray) -> tuple[float, bool]:
        raise NotImplementedError
