"""Continuous mountain car (classic-control dynamics), reward 100 at the goal minus |a|."""
from __future__ import annotations

import math

import numpy as np

from .base import Env

MIN_POSITION = -1.2
MAX_POSITION = 0.6
MAX_SPEED = 0.07
GOAL_POSITION = 0.45
POWER = 0.0015


def mountaincar_reward(goal: bool, a: float) -> float:
    return 100.0 * goal - abs(a)


class MountainCarContinuous(Env):
    id = "mountaincar-cont"
    obs_dim = 2
    max_steps = 999
    obs_low = (MIN_POSITION, -MAX_SPEED)
    obs_high = (MAX_POSITION, MAX_SPEED)

    def _reset_state(self):
        return np.array([self.rng.uniform(-0.6, -0.4), 0.0])

    def _obs(self):
        return self.state.copy()

    def _transition(self, a):
        force = float(a[0])
        pos, vel = self.state
        vel += force * POWER - 0.0025 * math.cos(3 * pos)
        vel = min(max(vel, -MAX_SPEED), MAX_SPEED)
        pos += vel
        pos = min(max(pos, MIN_POSITION), MAX_POSITION)
        if pos == MIN_POSITION and vel < 0:
            vel = 0.0
        self.state = np.array([pos, vel])
        goal = bool(pos >= GOAL_POSITION and vel >= 0.0)
        return mountaincar_reward(goal, force), goal
