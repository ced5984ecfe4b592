"""Cart-pole variants: the modified balancing task and the sparse swing-up task.

Balancing physics follow the classic-control CartPole (Euler, dt = 0.02,
12 degree / 2.4 m failure limits). Swing-up physics follow the well-known
swing-up variant with cart friction (dt = 0.01, pole starting downward).
"""
from __future__ import annotations

import math

import numpy as np

from .base import Env

GRAVITY = 9.8
MASS_CART = 1.0
MASS_POLE = 0.1
HALF_LENGTH = 0.5
FORCE_MAG = 10.0
DT = 0.02
THETA_LIMIT = 12 * 2 * math.pi / 360
X_LIMIT = 2.4


def discretize_force(a: float, coin: float) -> int:
    """Map a continuous action to push direction: 0 = left, 1 = right.

    ``coin`` is a uniform draw in [0, 1) used only on the middle band.
    """
    if a < -0.5:
        return 0
    if a > 0.5:
        return 1
    return 0 if coin < 0.5 else 1


def cartpole_mod_reward(a: float, ended: bool) -> float:
    return -0.1 * abs(a) - 0.05 * a * a + (-1.0 if ended else 0.1)


def cartpole_dynamics(state: np.ndarray, push: int) -> np.ndarray:
    x, x_dot, theta, theta_dot = state
    force = FORCE_MAG if push == 1 else -FORCE_MAG
    cos, sin = math.cos(theta), math.sin(theta)
    total = MASS_CART + MASS_POLE
    pml = MASS_POLE * HALF_LENGTH
    temp = (force + pml * theta_dot**2 * sin) / total
    theta_acc = (GRAVITY * sin - cos * temp) / (HALF_LENGTH * (4.0 / 3.0 - MASS_POLE * cos**2 / total))
    x_acc = temp - pml * theta_acc * cos / total
    return np.array([
        x + DT * x_dot,
        x_dot + DT * x_acc,
        theta + DT * theta_dot,
        theta_dot + DT * theta_acc,
    ])


class CartPoleModified(Env):
    """Balance task with a single continuous action in [-1, 1] and effort penalty.

    The middle band [-0.5, 0.5] pushes left or right with probability 1/2.
    A failure (pole or cart out of limits) ends the episode with -1.0; reaching
    the step limit is a truncation and still pays 0.1.
    """

    id = "cartpole-mod"
    obs_dim = 4
    max_steps = 200
    obs_low = (-X_LIMIT, -3.0, -THETA_LIMIT, -3.5)
    obs_high = (X_LIMIT, 3.0, THETA_LIMIT, 3.5)

    def _reset_state(self):
        return self.rng.uniform(-0.05, 0.05, size=4)

    def _obs(self):
        return self.state.copy()

    def _transition(self, a):
        act = float(a[0])
        push = discretize_force(act, self.rng.random())
        self.state = cartpole_dynamics(self.state, push)
        x, _, theta, _ = self.state
        ended = bool(abs(x) > X_LIMIT or abs(theta) > THETA_LIMIT)
        return cartpole_mod_reward(act, ended), ended


# swing-up constants
SU_GRAVITY = 9.82
SU_MASS_CART = 0.5
SU_MASS_POLE = 0.5
SU_LENGTH = 0.6
SU_FORCE_MAG = 10.0
SU_DT = 0.01
SU_FRICTION = 0.1
SU_X_LIMIT = 2.4


def swingup_sparse_reward(base: float, cos_theta: float, a: float) -> float:
    penalty = -0.1 * abs(a)
    return base + penalty if cos_theta > 0.8 else penalty


class CartPoleSwingUpSparse(Env):
    """Swing the pole up from hanging and hold it; reward only while cos(theta) > 0.8.

    theta = 0 is upright. The base reward before sparsification is cos(theta).
    """

    id = "cartpole-swingup-sparse"
    obs_dim = 5
    max_steps = 200
    obs_low = (-SU_X_LIMIT, -5.0, -1.0, -1.0, -10.0)
    obs_high = (SU_X_LIMIT, 5.0, 1.0, 1.0, 10.0)

    def _reset_state(self):
        return self.rng.normal(loc=[0.0, 0.0, math.pi, 0.0], scale=0.2)

    def _obs(self):
        x, x_dot, theta, theta_dot = self.state
        return np.array([x, x_dot, math.cos(theta), math.sin(theta), theta_dot])

    def _transition(self, a):
        act = float(a[0])
        force = act * SU_FORCE_MAG
        x, x_dot, theta, theta_dot = self.state
        s, c = math.sin(theta), math.cos(theta)
        m_total = SU_MASS_CART + SU_MASS_POLE
        mpl = SU_MASS_POLE * SU_LENGTH
        x_acc = (-2 * mpl * theta_dot**2 * s + 3 * SU_MASS_POLE * SU_GRAVITY * s * c
                 + 4 * force - 4 * SU_FRICTION * x_dot) / (4 * m_total - 3 * SU_MASS_POLE * c**2)
        theta_acc = (-3 * mpl * theta_dot**2 * s * c + 6 * m_total * SU_GRAVITY * s
                     + 6 * (force - SU_FRICTION * x_dot) * c) / (4 * SU_LENGTH * m_total - 3 * mpl * c**2)
        x = x + x_dot * SU_DT
        theta = theta + theta_dot * SU_DT
        x_dot = x_dot + x_acc * SU_DT
        theta_dot = theta_dot + theta_acc * SU_DT
        self.state = np.array([x, x_dot, theta, theta_dot])
        cos_theta = math.cos(theta)
        ended = bool(abs(x) > SU_X_LIMIT)
        return swingup_sparse_reward(cos_theta, cos_theta, act), ended
