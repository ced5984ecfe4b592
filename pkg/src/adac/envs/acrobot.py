"""Acrobot with the discrete torque set driven by one continuous action.

Dynamics are the classic-control Acrobot ("book" equations, RK4, dt = 0.2).
The reward is the original one: -1 per step, 0 on the step that reaches the goal height.
"""
from __future__ import annotations

import math

import numpy as np

from .base import Env

DT = 0.2
LINK_LENGTH_1 = 1.0
LINK_MASS_1 = 1.0
LINK_MASS_2 = 1.0
LINK_COM_1 = 0.5
LINK_COM_2 = 0.5
LINK_MOI = 1.0
MAX_VEL_1 = 4 * math.pi
MAX_VEL_2 = 9 * math.pi
TORQUES = (-1.0, 0.0, 1.0)


def discrete_action(a_cont: float) -> int:
    """[-1, -1/3) -> 0, [-1/3, 1/3) -> 1, [1/3, 1] -> 2."""
    if a_cont < -1.0 / 3.0:
        return 0
    if a_cont < 1.0 / 3.0:
        return 1
    return 2


def _wrap(x: float) -> float:
    return ((x + math.pi) % (2 * math.pi)) - math.pi


def _dsdt(s: np.ndarray, torque: float) -> np.ndarray:
    m1, m2, l1, lc1, lc2, i1, i2, g = (LINK_MASS_1, LINK_MASS_2, LINK_LENGTH_1,
                                       LINK_COM_1, LINK_COM_2, LINK_MOI, LINK_MOI, 9.8)
    theta1, theta2, dtheta1, dtheta2 = s
    d1 = m1 * lc1**2 + m2 * (l1**2 + lc2**2 + 2 * l1 * lc2 * math.cos(theta2)) + i1 + i2
    d2 = m2 * (lc2**2 + l1 * lc2 * math.cos(theta2)) + i2
    phi2 = m2 * lc2 * g * math.cos(theta1 + theta2 - math.pi / 2.0)
    phi1 = (-m2 * l1 * lc2 * dtheta2**2 * math.sin(theta2)
            - 2 * m2 * l1 * lc2 * dtheta2 * dtheta1 * math.sin(theta2)
            + (m1 * lc1 + m2 * l1) * g * math.cos(theta1 - math.pi / 2) + phi2)
    ddtheta2 = ((torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1**2 * math.sin(theta2) - phi2)
                / (m2 * lc2**2 + i2 - d2**2 / d1))
    ddtheta1 = -(d2 * ddtheta2 + phi1) / d1
    return np.array([dtheta1, dtheta2, ddtheta1, ddtheta2])


def _rk4(s: np.ndarray, torque: float, dt: float) -> np.ndarray:
    k1 = _dsdt(s, torque)
    k2 = _dsdt(s + dt / 2 * k1, torque)
    k3 = _dsdt(s + dt / 2 * k2, torque)
    k4 = _dsdt(s + dt * k3, torque)
    return s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


class AcrobotContinuous(Env):
    id = "acrobot-cont"
    obs_dim = 6
    max_steps = 500
    obs_low = (-1.0, -1.0, -1.0, -1.0, -MAX_VEL_1, -MAX_VEL_2)
    obs_high = (1.0, 1.0, 1.0, 1.0, MAX_VEL_1, MAX_VEL_2)

    def _reset_state(self):
        return self.rng.uniform(-0.1, 0.1, size=4)

    def _obs(self):
        t1, t2, d1, d2 = self.state
        return np.array([math.cos(t1), math.sin(t1), math.cos(t2), math.sin(t2), d1, d2])

    def _transition(self, a):
        torque = TORQUES[discrete_action(float(a[0]))]
        ns = _rk4(self.state, torque, DT)
        ns[0] = _wrap(ns[0])
        ns[1] = _wrap(ns[1])
        ns[2] = min(max(ns[2], -MAX_VEL_1), MAX_VEL_1)
        ns[3] = min(max(ns[3], -MAX_VEL_2), MAX_VEL_2)
        self.state = ns
        goal = bool(-math.cos(ns[0]) - math.cos(ns[1] + ns[0]) > 1.0)
        return (0.0 if goal else -1.0), goal
