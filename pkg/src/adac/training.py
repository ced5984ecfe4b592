"""Interaction loop, evaluation and the per-run CSV log."""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from . import envs
from .agents import Agent, AgentConfig, policy_bias
from .intrinsic import CountIntrinsic, ZeroIntrinsic
from .replay import ReplayBuffer, Transition

log = logging.getLogger(__name__)

RUNLOG_COLUMNS = ("step", "episode", "behavior_return", "eval_return", "policy_bias",
                  "critic_loss_tar", "critic_loss_beh", "beta")


@dataclass
class TrainSettings:
    total_steps: int
    eval_interval: int = 1000
    eval_episodes: int = 5
    bias_states: int = 64
    bias_samples: int = 100
    intrinsic: bool = False
    kappa: float = 0.1
    bins: int = 10


@dataclass
class RunLog:
    rows: list = field(default_factory=list)

    def add(self, **values) -> None:
        unknown = set(values) - set(RUNLOG_COLUMNS)
        if unknown:
            raise KeyError(f"unknown RunLog columns {sorted(unknown)}")
        self.rows.append({c: values.get(c) for c in RUNLOG_COLUMNS})

    def evals(self) -> list[dict]:
        return [r for r in self.rows if r["eval_return"] is not None]

    def eval_curve(self) -> tuple[np.ndarray, np.ndarray]:
        ev = self.evals()
        return np.array([r["step"] for r in ev]), np.array([r["eval_return"] for r in ev])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RUNLOG_COLUMNS)
        for r in self.rows:
            w.writerow(["" if r[c] is None else _fmt(r[c]) for c in RUNLOG_COLUMNS])
        return buf.getvalue()

    def write(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def evaluate(agent: Agent, env_id: str, seeds) -> float:
    """Mean undiscounted return of the deterministic target policy (no noise of any kind)."""
    env = envs.make(env_id)
    returns = []
    for seed in seeds:
        obs = env.reset(seed=int(seed))
        total, done = 0.0, False
        while not done:
            res = env.step(agent.target_action(obs))
            total += res.reward
            obs, done = res.obs, res.done
        returns.append(total)
    return float(np.mean(returns))


def _streams(seed: int):
    ss = np.random.SeedSequence(seed)
    env_ss, agent_ss, diag_ss, eval_ss = ss.spawn(4)
    return (int(env_ss.generate_state(1)[0]), np.random.default_rng(agent_ss),
            np.random.default_rng(diag_ss), eval_ss.generate_state(64))


def train(env_id: str, kind: str, cfg: AgentConfig, settings: TrainSettings, seed: int,
          agent: Agent | None = None) -> tuple[RunLog, Agent]:
    """Run one seed. All randomness derives from ``seed``."""
    env_seed, agent_rng, diag_rng, eval_seeds = _streams(seed)
    env = envs.make(env_id, env_seed)
    if agent is None:
        agent = Agent(kind, env.obs_dim, env.action_dim, env.action_low, env.action_high, cfg,
                      agent_rng, total_steps=settings.total_steps)
    eval_seeds = eval_seeds[: settings.eval_episodes]
    buffer = ReplayBuffer(cfg.buffer_size, env.obs_dim, env.action_dim)
    bonus = (CountIntrinsic(env.obs_low, env.obs_high, settings.bins, settings.kappa)
             if settings.intrinsic else ZeroIntrinsic())
    runlog = RunLog()
    last_losses = (None, None)

    def log_eval(step: int, probe_states: np.ndarray) -> None:
        bias = None
        if agent.adac:
            bias = policy_bias(agent.mu_net, probe_states, settings.bias_samples, diag_rng, agent.pi_net)
        runlog.add(step=step, episode=episode, eval_return=evaluate(agent, env_id, eval_seeds),
                   policy_bias=bias, critic_loss_tar=last_losses[0], critic_loss_beh=last_losses[1],
                   beta=agent.beta(step) if agent.adac else None)

    episode = 0
    obs = env.reset()
    log_eval(0, obs[None, :])
    ep_return = 0.0
    for step in range(settings.total_steps):
        a = agent.act(obs)
        res = env.step(a)
        r_in = bonus(res.obs)
        terminal = res.done and not res.truncated
        buffer.add(Transition(obs, a, res.reward, r_in, res.obs, terminal))
        ep_return += res.reward
        obs = res.obs
        if len(buffer) >= max(cfg.warmup, cfg.batch_size):
            batch = buffer.sample(cfg.batch_size, agent.rng)
            last_losses = agent.update(batch, step)
        if res.done:
            runlog.add(step=step + 1, episode=episode, behavior_return=ep_return)
            episode += 1
            ep_return = 0.0
            obs = env.reset()
        if (step + 1) % settings.eval_interval == 0:
            n = min(len(buffer), settings.bias_states)
            probe = buffer.s[diag_rng.integers(0, len(buffer), n)] if n else obs[None, :]
            log_eval(step + 1, probe)
    return runlog, agent
