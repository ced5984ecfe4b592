"""DDPG, TD3 and their ADAC counterparts with disentangled target/behaviour policies.

ADAC keeps two critics: ``Q_tar`` regresses onto environment reward and
``Q_beh`` onto environment plus intrinsic reward. Both bootstrap with the target
policy pi (xi = 0 through the target copy of the policy network), which bounds
the behaviour critic. The policy network is shared between pi and the SVGD
behaviour sampler mu unless ``split_policy`` is set (ablation).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .nn import Adam, CriticNet, PolicyNet, soft_update
from .replay import Batch
from .svgd import KernelSpec, SvgdConfig, dpg_gradient, sample_behavior_action, svgd_policy_gradient

AGENT_KINDS = ("ddpg", "td3", "adac-ddpg", "adac-td3")


class TrainingDiverged(FloatingPointError):
    pass


@dataclass
class AgentConfig:
    gamma: float = 0.99
    tau: float = 0.005
    batch_size: int = 64
    buffer_size: int = 100_000
    warmup: int = 1000
    hidden: tuple = (256, 256)
    lr_critic: float = 1e-3
    # target policy / behaviour policy learning rates; None -> per-kind default
    lr_pi: float | None = None
    lr_mu: float | None = None
    n_particles: int = 32
    beta_start: float = 2.0
    beta_end: float = 1.0
    noise_dim: int = 16
    # rows of the minibatch used for the SVGD step; None -> the whole minibatch
    svgd_states: int | None = None
    policy_delay: int = 2
    target_noise: float = 0.2
    noise_clip: float = 0.5
    exploration_noise: float = 0.2
    split_policy: bool = False

    def __post_init__(self):
        self.hidden = tuple(self.hidden)
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")

    @classmethod
    def from_dict(cls, d: dict) -> "AgentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown agent config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["hidden"] = list(self.hidden)
        return out


_DEFAULT_LR = {  # (pi, mu)
    "ddpg": (1e-4, 1e-4),
    "adac-ddpg": (1e-4, 1e-4),
    "td3": (1e-3, 3e-4),
    "adac-td3": (1e-3, 3e-4),
}


def _mse(pred: Tensor, target: np.ndarray) -> Tensor:
    return ad.mean(ad.sq_diff(pred, Tensor(target[:, None])))


class Agent:
    """One of ``ddpg``, ``td3``, ``adac-ddpg``, ``adac-td3``."""

    def __init__(self, kind: str, obs_dim: int, action_dim: int, low, high, cfg: AgentConfig,
                 rng: np.random.Generator, total_steps: int = 1):
        if kind not in AGENT_KINDS:
            raise ValueError(f"unknown agent kind {kind!r}; choose from {AGENT_KINDS}")
        self.kind = kind
        self.cfg = cfg
        self.rng = rng
        self.adac = kind.startswith("adac")
        self.twin = kind.endswith("td3")
        self.action_dim = action_dim
        lr_pi, lr_mu = _DEFAULT_LR[kind]
        lr_pi = cfg.lr_pi if cfg.lr_pi is not None else lr_pi
        lr_mu = cfg.lr_mu if cfg.lr_mu is not None else lr_mu
        noise_dim = cfg.noise_dim if self.adac else 0

        self.pi_net = PolicyNet(obs_dim, action_dim, low, high, noise_dim, cfg.hidden, rng)
        self.mu_net = self.pi_net.clone() if (self.adac and cfg.split_policy) else self.pi_net
        self.pi_targ = self.pi_net.clone()
        n_critics = 2 if self.twin else 1
        self.q_tar = [CriticNet(obs_dim, action_dim, cfg.hidden, rng) for _ in range(n_critics)]
        # behaviour critics start as exact copies of the target critics
        self.q_beh = [q.clone() for q in self.q_tar] if self.adac else []
        self.q_tar_targ = [q.clone() for q in self.q_tar]
        self.q_beh_targ = [q.clone() for q in self.q_beh]

        self.critic_opts = [Adam(q.parameters(), lr=cfg.lr_critic) for q in self.q_tar + self.q_beh]
        self.pi_opt = Adam(self.pi_net.parameters(), lr=lr_pi)
        self.mu_opt = Adam(self.mu_net.parameters(), lr=lr_mu) if self.adac else None

        self.svgd = SvgdConfig(cfg.n_particles, cfg.beta_start, cfg.beta_end, max(total_steps, 1))
        self.kernel = KernelSpec(action_dim, cfg.n_particles)
        self.updates = 0
        self.last_bootstrap_actions: np.ndarray | None = None

    # -- acting ---------------------------------------------------------------

    def act(self, obs) -> np.ndarray:
        """Behaviour action: mu for ADAC, pi plus Gaussian noise for the baselines."""
        if self.adac:
            return sample_behavior_action(self.mu_net, obs, self.kernel, self.rng)
        a = self.pi_net.target_action(obs)[0]
        a = a + self.cfg.exploration_noise * self.rng.standard_normal(self.action_dim)
        return np.clip(a, self.pi_net.low, self.pi_net.high)

    def target_action(self, obs) -> np.ndarray:
        return self.pi_net.target_action(obs)[0]

    def beta(self, step: int) -> float:
        return self.svgd.beta(step)

    # -- learning -------------------------------------------------------------

    def bootstrap_actions(self, s_next: np.ndarray) -> np.ndarray:
        """Next actions for both critics' targets, always from the target policy copy."""
        a = self.pi_targ.target_action(s_next)
        if self.twin:
            eps = np.clip(self.cfg.target_noise * self.rng.standard_normal(a.shape),
                          -self.cfg.noise_clip, self.cfg.noise_clip)
            a = np.clip(a + eps, self.pi_targ.low, self.pi_targ.high)
        self.last_bootstrap_actions = a
        return a

    def critic_targets(self, batch: Batch) -> tuple[np.ndarray, np.ndarray | None]:
        a_next = self.bootstrap_actions(batch.s_next)
        live = self.cfg.gamma * (1.0 - batch.done)
        q_next = np.min([q.value(batch.s_next, a_next) for q in self.q_tar_targ], axis=0)
        y = batch.r + live * q_next
        if not self.adac:
            return y, None
        qb_next = np.min([q.value(batch.s_next, a_next) for q in self.q_beh_targ], axis=0)
        return y, (batch.r + batch.r_in) + live * qb_next

    def critic_update(self, batch: Batch) -> tuple[float, float]:
        y, y_beh = self.critic_targets(batch)
        pairs = [(q, y) for q in self.q_tar] + [(q, y_beh) for q in self.q_beh]
        losses = []
        for (q, target), opt in zip(pairs, self.critic_opts):
            loss = _mse(q.forward(batch.s, batch.a), target)
            if not math.isfinite(float(loss.data)):
                raise TrainingDiverged(f"critic loss is {float(loss.data)} at update {self.updates}")
            opt.zero_grad()
            ad.backward(loss)
            opt.step()
            losses.append(float(loss.data))
        n = len(self.q_tar)
        loss_tar = losses[0]
        loss_beh = losses[n] if self.adac else float("nan")
        return loss_tar, loss_beh

    def _apply(self, opt: Adam, params, grads) -> None:
        for p, g in zip(params, grads):
            if not np.all(np.isfinite(g)):
                raise TrainingDiverged(f"non-finite policy gradient at update {self.updates}")
            p.grad = -g
        opt.step()

    def actor_update(self, batch: Batch, step: int) -> None:
        """Deterministic policy gradient on pi, then (ADAC) the SVGD step on mu."""
        g_pi = dpg_gradient(self.pi_net, self.q_tar[0], batch.s)
        self._apply(self.pi_opt, self.pi_net.parameters(), g_pi)
        if self.adac:
            states = batch.s if self.cfg.svgd_states is None else batch.s[: self.cfg.svgd_states]
            g_mu = svgd_policy_gradient(self.mu_net, self.q_beh[0], states, self.cfg.n_particles,
                                        self.beta(step), self.rng)
            self._apply(self.mu_opt, self.mu_net.parameters(), g_mu)

    def update_targets(self) -> None:
        tau = self.cfg.tau
        for q, qt in zip(self.q_tar + self.q_beh, self.q_tar_targ + self.q_beh_targ):
            soft_update(qt.parameters(), q.parameters(), tau)
        soft_update(self.pi_targ.parameters(), self.pi_net.parameters(), tau)

    def update(self, batch: Batch, step: int) -> tuple[float, float]:
        losses = self.critic_update(batch)
        delay = self.cfg.policy_delay if self.twin else 1
        if self.updates % delay == delay - 1:
            self.actor_update(batch, step)
            self.update_targets()
        self.updates += 1
        return losses

    # -- diagnostics ------------------------------------------------------------

    def nets(self) -> dict:
        out = {"pi": self.pi_net, "pi_targ": self.pi_targ}
        if self.mu_net is not self.pi_net:
            out["mu"] = self.mu_net
        for name, group in (("q_tar", self.q_tar), ("q_beh", self.q_beh),
                            ("q_tar_targ", self.q_tar_targ), ("q_beh_targ", self.q_beh_targ)):
            for k, q in enumerate(group):
                out[f"{name}{k}"] = q
        return out


def policy_bias(behavior: PolicyNet, states, n_samples: int, rng: np.random.Generator,
                target: PolicyNet | None = None) -> float:
    """Mean over states of || E_xi f_mu(s, xi) - f_pi(s, 0) ||, with n_samples xi draws per state."""
    if n_samples < 100:
        raise ValueError("policy_bias: n_samples must be at least 100")
    target = behavior if target is None else target
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    m = states.shape[0]
    xi = rng.standard_normal((m * n_samples, behavior.noise_dim))
    acts = behavior.predict(np.repeat(states, n_samples, axis=0), xi)
    mean_act = acts.reshape(m, n_samples, -1).mean(axis=1)
    return float(np.linalg.norm(mean_act - target.target_action(states), axis=1).mean())
