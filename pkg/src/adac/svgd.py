"""Amortized SVGD for the energy-based behaviour policy.

The kernel is a Gaussian with bandwidth ``h = d / K`` (action dimension over
particle count), normalized by ``1 / (sqrt(2 pi) h)``. For each state, ``K``
noise draws are pushed through the shared policy network and every particle
receives the direction

    delta(a_l) = 1/K * sum_j [ k(a_l, a_j) dQ/da(a_j) + beta * d k(a_l, a_j)/d a_j ]

which is chained through df/dphi. Gradients returned here are ascent
directions on the behaviour objective; optimizers minimize, so callers negate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import autodiff as ad
from .nn import Adam, CriticNet, PolicyNet


@dataclass(frozen=True)
class KernelSpec:
    action_dim: int
    n_particles: int

    def __post_init__(self):
        if self.n_particles < 1 or self.action_dim < 1:
            raise ValueError("KernelSpec: action_dim and n_particles must be positive")

    @property
    def bandwidth(self) -> float:
        return self.action_dim / self.n_particles

    @property
    def norm(self) -> float:
        return 1.0 / (math.sqrt(2 * math.pi) * self.bandwidth)


@dataclass
class SvgdConfig:
    n_particles: int = 32
    beta_start: float = 2.0
    beta_end: float = 1.0
    horizon: int = 1_000_000

    def beta(self, step: int) -> float:
        """Linear anneal from ``beta_start`` to ``beta_end`` over ``horizon`` steps."""
        frac = min(max(step / self.horizon, 0.0), 1.0) if self.horizon > 0 else 1.0
        return self.beta_start + (self.beta_end - self.beta_start) * frac


def kernel(a, a_hat, spec: KernelSpec) -> float:
    d = np.asarray(a, dtype=np.float64) - np.asarray(a_hat, dtype=np.float64)
    return spec.norm * math.exp(-float(d @ d) / (2 * spec.bandwidth**2))


def kernel_grad(a, a_hat, spec: KernelSpec) -> np.ndarray:
    """Gradient of ``kernel(a, a_hat)`` with respect to ``a_hat``: k * (a - a_hat) / h**2."""
    a = np.asarray(a, dtype=np.float64)
    a_hat = np.asarray(a_hat, dtype=np.float64)
    return kernel(a, a_hat, spec) * (a - a_hat) / spec.bandwidth**2


def svgd_direction(actions: np.ndarray, action_grads: np.ndarray, spec: KernelSpec, beta: float,
                   include_self: bool = True) -> np.ndarray:
    """Per-particle SVGD direction for particle sets of shape (M, K, d).

    With ``include_self=False`` each particle is scored against the other K - 1
    only (the average then runs over K - 1 terms).
    """
    h2 = spec.bandwidth**2
    diff = actions[:, :, None, :] - actions[:, None, :, :]  # [i, l, j] = a_l - a_j
    kmat = spec.norm * np.exp(-np.einsum("iljd,iljd->ilj", diff, diff) / (2 * h2))
    n = actions.shape[1]
    if not include_self:
        kmat = kmat * (1.0 - np.eye(n))
        n -= 1
    drive = np.einsum("ilj,ijd->ild", kmat, action_grads)
    repulse = np.einsum("ilj,iljd->ild", kmat, diff) / h2
    return (drive + beta * repulse) / n


def draw_noise(rng: np.random.Generator, n_states: int, n_particles: int, noise_dim: int) -> np.ndarray:
    return rng.standard_normal((n_states, n_particles, noise_dim))


def svgd_policy_gradient(policy: PolicyNet, critic: CriticNet, states: np.ndarray, n_particles: int,
                         beta: float, rng: np.random.Generator | None = None,
                         xi: np.ndarray | None = None) -> list[np.ndarray]:
    """Ascent direction on the behaviour objective for every policy parameter.

    ``xi`` (shape (M, K, n_xi)) overrides the fresh standard-normal draws.
    The average runs over the M x K (state, particle) pairs.
    """
    if n_particles < 2 and beta != 0.0:
        raise ValueError("svgd_policy_gradient: repulsion needs at least 2 particles")
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    m, k, d = states.shape[0], n_particles, policy.action_dim
    if xi is None:
        xi = draw_noise(rng, m, k, policy.noise_dim)
    if xi.shape != (m, k, policy.noise_dim):
        raise ValueError(f"svgd_policy_gradient: xi must have shape {(m, k, policy.noise_dim)}, got {xi.shape}")
    flat_s = np.repeat(states, k, axis=0)
    acts = policy.forward(flat_s, xi.reshape(m * k, -1))
    q_grad = critic.action_grad(flat_s, acts.data)
    delta = svgd_direction(acts.data.reshape(m, k, d), q_grad.reshape(m, k, d), KernelSpec(d, k), beta)
    return ad.grad(acts, policy.parameters(), seed=delta.reshape(m * k, d) / (m * k))


def dpg_gradient(policy: PolicyNet, critic: CriticNet, states: np.ndarray) -> list[np.ndarray]:
    """Deterministic policy gradient through pi(s) = f(s, 0), averaged over states."""
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    m = states.shape[0]
    acts = policy.forward(states, np.zeros((m, policy.noise_dim)))
    q_grad = critic.action_grad(states, acts.data)
    return ad.grad(acts, policy.parameters(), seed=q_grad / m)


def sample_behavior_action(policy: PolicyNet, s, spec: KernelSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw xi, take f(s, xi) as kernel centre, add N(0, h^2) noise, clip to bounds."""
    xi = rng.standard_normal((1, policy.noise_dim))
    centre = policy.predict(np.atleast_2d(s), xi)[0]
    noisy = centre + spec.bandwidth * rng.standard_normal(policy.action_dim)
    return np.clip(noisy, policy.low, policy.high)


# ---------------------------------------------------------------------------
# one-dimensional toy: fit a state-free sampler f(xi) to exp(log_density / beta)


class DivergenceError(FloatingPointError):
    pass


def fd_derivative(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    return (fn(x + h) - fn(x - h)) / (2 * h)


class ToySampler:
    def __init__(self, net: PolicyNet):
        self.net = net

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        xi = rng.standard_normal((n, self.net.noise_dim))
        return self.net.predict(np.zeros((n, 0)), xi)[:, 0]


def toy_fit(log_density: Callable[[np.ndarray], np.ndarray], beta: float, steps: int,
            n_particles: int = 32, noise_dim: int = 1, hidden=(32, 32), lr: float = 1e-3,
            bound: float = 4.0, batch: int = 16, seed: int = 0, include_self: bool = False) -> ToySampler:
    """Train f(xi) with the SVGD direction using Q := log_density (no state input).

    Each step draws ``batch`` independent particle sets of size ``n_particles``.
    """
    rng = np.random.default_rng(seed)
    net = PolicyNet(0, 1, -bound, bound, noise_dim=noise_dim, hidden=hidden, rng=rng)
    opt = Adam(net.parameters(), lr=lr)
    spec = KernelSpec(1, n_particles)
    params = net.parameters()
    for step in range(steps):
        xi = draw_noise(rng, batch, n_particles, noise_dim)
        acts = net.forward(np.zeros((batch * n_particles, 0)), xi.reshape(batch * n_particles, -1))
        score = fd_derivative(log_density, acts.data)
        delta = svgd_direction(acts.data.reshape(batch, n_particles, 1), score.reshape(batch, n_particles, 1),
                               spec, beta, include_self)
        grads = ad.grad(acts, params, seed=delta.reshape(-1, 1) / (batch * n_particles))
        if not all(np.all(np.isfinite(g)) for g in grads):
            raise DivergenceError(f"toy_fit diverged at step {step}")
        for p, g in zip(params, grads):
            p.grad = -g
        opt.step()
    return ToySampler(net)


def gaussian_log_density(mean: float = 0.0, std: float = 1.0):
    def logp(x):
        return -0.5 * ((x - mean) / std) ** 2 - math.log(std * math.sqrt(2 * math.pi))
    return logp


def bimodal_log_density(offset: float = 1.0, std: float = 0.5):
    """Equal-weight mixture of N(-offset, std^2) and N(offset, std^2)."""
    def logp(x):
        za = -0.5 * ((x - offset) / std) ** 2
        zb = -0.5 * ((x + offset) / std) ** 2
        top = np.maximum(za, zb)
        return top + np.log(0.5 * np.exp(za - top) + 0.5 * np.exp(zb - top)) - math.log(std * math.sqrt(2 * math.pi))
    return logp


TOY_TARGETS = {"unimodal": gaussian_log_density, "bimodal": bimodal_log_density}


def mode_masses(samples: np.ndarray, split: float = 0.0) -> tuple[float, float]:
    """Fraction of samples on each side of ``split`` (left, right)."""
    samples = np.asarray(samples)
    if samples.size == 0:
        return 0.0, 0.0
    left = float(np.mean(samples < split))
    return left, 1.0 - left
