"""Actor/critic MLPs on top of :mod:`adac.autodiff`, Adam, and soft target updates."""
from __future__ import annotations

import copy
from pathlib import Path
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor


def _uniform(rng: np.random.Generator, limit: float, shape) -> Tensor:
    return Tensor(rng.uniform(-limit, limit, size=shape), requires_grad=True)


class MLP:
    """relu hidden layers, linear output. Weights stored as (fan_in, fan_out)."""

    def __init__(self, sizes: Sequence[int], rng: np.random.Generator, final_limit: float = 3e-3):
        self.sizes = tuple(sizes)
        self.layers: list[tuple[Tensor, Tensor]] = []
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            last = i == len(sizes) - 2
            limit = final_limit if last else 1.0 / np.sqrt(fan_in)
            self.layers.append((_uniform(rng, limit, (fan_in, fan_out)), _uniform(rng, limit, (fan_out,))))

    def __call__(self, x: Tensor) -> Tensor:
        n = len(self.layers)
        for i, (w, b) in enumerate(self.layers):
            x = ad.linear(x, w, b)
            if i < n - 1:
                x = ad.relu(x)
        return x

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Same map as ``__call__`` on plain arrays, without recording a tape."""
        n = len(self.layers)
        for i, (w, b) in enumerate(self.layers):
            x = x @ w.data + b.data
            if i < n - 1:
                np.maximum(x, 0.0, out=x)
        return x

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer]


def _batch(x, width: int, what: str) -> np.ndarray:
    x = np.asarray(x.data if isinstance(x, Tensor) else x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != width:
        raise ValueError(f"{what}: expected {width} columns, got shape {x.shape}")
    return x


class PolicyNet:
    """Shared network f(s, xi): xi = 0 gives the target policy, xi ~ N(0, I) the behaviour sampler.

    The noise vector is concatenated with the state at the input; the output is
    tanh-squashed and affinely mapped onto ``[low, high]`` per dimension.
    """

    def __init__(self, state_dim: int, action_dim: int, low, high, noise_dim: int = 16,
                 hidden: Sequence[int] = (256, 256), rng: np.random.Generator | None = None):
        rng = np.random.default_rng(0) if rng is None else rng
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.noise_dim = noise_dim
        self.low = np.broadcast_to(np.asarray(low, dtype=np.float64), (action_dim,)).copy()
        self.high = np.broadcast_to(np.asarray(high, dtype=np.float64), (action_dim,)).copy()
        if np.any(self.high <= self.low):
            raise ValueError("PolicyNet: every high bound must exceed its low bound")
        self._mid = (self.high + self.low) / 2
        self._half = (self.high - self.low) / 2
        self.body = MLP([state_dim + noise_dim, *hidden, action_dim], rng)

    def _input(self, s, xi) -> np.ndarray:
        xi = _batch(xi, self.noise_dim, "policy_forward xi")
        if not self.state_dim:
            return xi
        s = _batch(s, self.state_dim, "policy_forward s")
        if s.shape[0] != xi.shape[0]:
            raise ValueError(f"policy_forward: batch sizes differ ({s.shape[0]} vs {xi.shape[0]})")
        return np.concatenate([s, xi], axis=1)

    def forward(self, s, xi) -> Tensor:
        squashed = ad.tanh(self.body(Tensor(self._input(s, xi))))
        if np.all(self._half == self._half[0]):
            scaled = ad.scale(squashed, float(self._half[0]))
        else:
            scaled = ad.mul(squashed, Tensor(np.broadcast_to(self._half, squashed.shape)))
        if np.any(self._mid != 0.0):
            scaled = ad.add(scaled, self._mid)
        return scaled

    __call__ = forward

    def predict(self, s, xi) -> np.ndarray:
        """Actions as a plain array, no tape."""
        return self._mid + self._half * np.tanh(self.body.predict(self._input(s, xi)))

    def target_action(self, s) -> np.ndarray:
        """pi(s) = f(s, 0) as a plain array."""
        s = _batch(s, self.state_dim, "target_action s") if self.state_dim else np.zeros((1, 0))
        return self.predict(s, np.zeros((s.shape[0], self.noise_dim)))

    def parameters(self) -> list[Tensor]:
        return self.body.parameters()

    def clone(self) -> "PolicyNet":
        return copy.deepcopy(self)


class CriticNet:
    """Q(s, a) -> one scalar per row."""

    def __init__(self, state_dim: int, action_dim: int, hidden: Sequence[int] = (256, 256),
                 rng: np.random.Generator | None = None):
        rng = np.random.default_rng(0) if rng is None else rng
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.body = MLP([state_dim + action_dim, *hidden, 1], rng)

    def forward(self, s, a) -> Tensor:
        s = _batch(s, self.state_dim, "critic_forward s")
        if isinstance(a, Tensor):
            if a.data.ndim != 2 or a.shape[1] != self.action_dim:
                raise ValueError(f"critic_forward a: expected {self.action_dim} columns, got shape {a.shape}")
        else:
            a = Tensor(_batch(a, self.action_dim, "critic_forward a"))
        if s.shape[0] != a.shape[0]:
            raise ValueError(f"critic_forward: batch sizes differ ({s.shape[0]} vs {a.shape[0]})")
        return self.body(ad.concat([Tensor(s), a]))

    __call__ = forward

    def value(self, s, a) -> np.ndarray:
        s = _batch(s, self.state_dim, "critic_forward s")
        a = _batch(a, self.action_dim, "critic_forward a")
        if s.shape[0] != a.shape[0]:
            raise ValueError(f"critic_forward: batch sizes differ ({s.shape[0]} vs {a.shape[0]})")
        return self.body.predict(np.concatenate([s, a], axis=1))[:, 0]

    def action_grad(self, s, a) -> np.ndarray:
        """dQ(s, a)/da per row, leaving parameter grads untouched."""
        a_t = Tensor(_batch(a, self.action_dim, "action_grad a"), requires_grad=True)
        return ad.grad_wrt_input(self.forward(s, a_t), a_t)

    def parameters(self) -> list[Tensor]:
        return self.body.parameters()

    def clone(self) -> "CriticNet":
        return copy.deepcopy(self)


def zero_grad(params: Sequence[Tensor]) -> None:
    for p in params:
        p.grad = None


def soft_update(target_params: Sequence[Tensor], online_params: Sequence[Tensor], tau: float) -> None:
    """target <- tau * online + (1 - tau) * target, in place."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"soft_update: tau must lie in [0, 1], got {tau}")
    if len(target_params) != len(online_params):
        raise ValueError("soft_update: parameter lists differ in length")
    for t, o in zip(target_params, online_params):
        if t.shape != o.shape:
            raise ValueError(f"soft_update: shape mismatch {t.shape} vs {o.shape}")
        if tau == 1.0:
            t.data[...] = o.data
        elif tau > 0.0:
            t.data *= 1.0 - tau
            t.data += tau * o.data


class Adam:
    """Adam over a parameter list; moments live in one flat vector for speed."""

    def __init__(self, params: Sequence[Tensor], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        sizes = [p.size for p in self.params]
        self._offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
        self.m = np.zeros(self._offsets[-1])
        self.v = np.zeros(self._offsets[-1])
        self.t = 0

    def step(self) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        # a missing grad counts as zero for the moments but leaves that parameter untouched
        g = np.concatenate([np.zeros(p.size) if p.grad is None else p.grad.reshape(-1) for p in self.params])
        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * g
        self.v *= self.beta2
        g *= g
        self.v += (1.0 - self.beta2) * g
        denom = np.sqrt(self.v / c2)
        denom += self.eps
        upd = (self.lr / c1) * self.m / denom
        off = self._offsets
        for i, p in enumerate(self.params):
            if p.grad is not None:
                p.data -= upd[off[i]:off[i + 1]].reshape(p.shape)

    def zero_grad(self) -> None:
        zero_grad(self.params)


# ---------------------------------------------------------------------------
# checkpoints: a numpy .npz archive, one array per "<net>/<index>" key


def save_checkpoint(path: str | Path, nets: dict) -> None:
    arrays = {f"{name}/{i}": p.data for name, net in nets.items() for i, p in enumerate(net.parameters())}
    np.savez(path, **arrays)


def load_checkpoint(path: str | Path, nets: dict) -> None:
    with np.load(path) as archive:
        for name, net in nets.items():
            for i, p in enumerate(net.parameters()):
                arr = archive[f"{name}/{i}"]
                if arr.shape != p.shape:
                    raise ValueError(f"load_checkpoint: {name}/{i} has shape {arr.shape}, expected {p.shape}")
                p.data[...] = arr
