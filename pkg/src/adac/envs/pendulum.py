"""Single pendulum with sparse upright reward (classic-control Pendulum dynamics)."""
from __future__ import annotations

import math

import numpy as np

from .base import Env

MAX_SPEED = 8.0
MAX_TORQUE = 2.0
DT = 0.05
G = 10.0
MASS = 1.0
LENGTH = 1.0


def pendulum_sparse_reward(cos_theta: float) -> float:
    return 10.0 if cos_theta > 0.95 else 0.0


class PendulumSparse(Env):
    """theta = 0 points upright. The reward is evaluated on the pre-step angle."""

    id = "pendulum-sparse"
    obs_dim = 3
    action_low = -MAX_TORQUE
    action_high = MAX_TORQUE
    max_steps = 200
    obs_low = (-1.0, -1.0, -MAX_SPEED)
    obs_high = (1.0, 1.0, MAX_SPEED)

    def _reset_state(self):
        return np.array([self.rng.uniform(-math.pi, math.pi), self.rng.uniform(-1.0, 1.0)])

    def _obs(self):
        th, thdot = self.state
        return np.array([math.cos(th), math.sin(th), thdot])

    def _transition(self, a):
        th, thdot = self.state
        u = float(a[0])
        reward = pendulum_sparse_reward(math.cos(th))
        thdot = thdot + (3 * G / (2 * LENGTH) * math.sin(th) + 3.0 / (MASS * LENGTH**2) * u) * DT
        thdot = min(max(thdot, -MAX_SPEED), MAX_SPEED)
        th = th + thdot * DT
        self.state = np.array([th, thdot])
        return reward, False
