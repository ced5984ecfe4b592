"""Environment registry keyed by string id."""
from __future__ import annotations

from .acrobot import AcrobotContinuous
from .base import EpisodeOver, Env, StepResult
from .cartpole import CartPoleModified, CartPoleSwingUpSparse
from .mountaincar import MountainCarContinuous
from .pendulum import PendulumSparse

REGISTRY: dict[str, type[Env]] = {
    cls.id: cls
    for cls in (CartPoleModified, PendulumSparse, AcrobotContinuous, MountainCarContinuous, CartPoleSwingUpSparse)
}


def make(env_id: str, seed: int | None = None) -> Env:
    try:
        cls = REGISTRY[env_id]
    except KeyError:
        raise KeyError(f"unknown environment {env_id!r}; choose from {sorted(REGISTRY)}") from None
    return cls(seed)


__all__ = ["Env", "EpisodeOver", "StepResult", "REGISTRY", "make"]
