"""Command-line harness: ``python -m adac <train|svgd-toy|verify|bias-ablation>``.

Run configs are JSON objects::

    {"env": "cartpole-mod", "agent": "adac-ddpg", "seeds": [0, 1], "total_steps": 50000,
     "eval_interval": 5000, "eval_episodes": 10, "intrinsic": false, "kappa": 0.1,
     "bins": 10, "workers": 1, "out_dir": "runs/cartpole", "agent_config": {"hidden": [64, 64]}}

``ADAC_OUT`` overrides ``out_dir``. Every CSV has a header row.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import envs, mdpcheck
from .agents import AGENT_KINDS, AgentConfig, TrainingDiverged
from .svgd import TOY_TARGETS, DivergenceError, mode_masses, toy_fit
from .training import TrainSettings, train

log = logging.getLogger("adac")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NAN = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    env: str
    agent: str
    seeds: list = field(default_factory=lambda: [0])
    total_steps: int = 50_000
    eval_interval: int = 1000
    eval_episodes: int = 5
    intrinsic: bool = False
    kappa: float = 0.1
    bins: int = 10
    bias_states: int = 64
    bias_samples: int = 100
    workers: int = 1
    out_dir: str = "runs"
    agent_config: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.env not in envs.REGISTRY:
            raise ConfigError(f"unknown env {self.env!r}; choose from {sorted(envs.REGISTRY)}")
        if self.agent not in AGENT_KINDS:
            raise ConfigError(f"unknown agent {self.agent!r}; choose from {AGENT_KINDS}")
        if not self.seeds or not all(isinstance(s, int) and s >= 0 for s in self.seeds):
            raise ConfigError("seeds must be a non-empty list of non-negative integers")
        if self.total_steps < 0 or self.eval_interval < 1 or self.eval_episodes < 1:
            raise ConfigError("total_steps must be >= 0, eval_interval and eval_episodes >= 1")
        try:
            self.agent_cfg = AgentConfig.from_dict(self.agent_config)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"agent_config: {exc}") from exc

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = {"env", "agent"} - set(d)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(d)

    def settings(self) -> TrainSettings:
        return TrainSettings(total_steps=self.total_steps, eval_interval=self.eval_interval,
                             eval_episodes=self.eval_episodes, bias_states=self.bias_states,
                             bias_samples=self.bias_samples, intrinsic=self.intrinsic,
                             kappa=self.kappa, bins=self.bins)

    def output_dir(self) -> Path:
        return Path(os.environ.get("ADAC_OUT") or self.out_dir)


def run_csv_name(env: str, agent: str, seed: int, tag: str = "") -> str:
    return f"{env}_{agent}{tag}_seed{seed}.csv"


def _run_one(args) -> tuple[int, str, float]:
    cfg, seed, agent_cfg, tag = args
    runlog, _ = train(cfg.env, cfg.agent, agent_cfg, cfg.settings(), seed)
    path = cfg.output_dir() / run_csv_name(cfg.env, cfg.agent, seed, tag)
    runlog.write(path)
    return seed, str(path), float(runlog.evals()[-1]["eval_return"])


def _run_seeds(cfg: RunConfig, agent_cfg: AgentConfig, tag: str = "") -> list[tuple[int, str, float]]:
    cfg.output_dir().mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, s, agent_cfg, tag) for s in cfg.seeds]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(_run_one, jobs))
    return [_run_one(j) for j in jobs]


def _plot_curves(paths: list[str], out: Path, title: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for p in paths:
        with open(p) as fh:
            rows = [r for r in csv.DictReader(fh) if r["eval_return"]]
        ax.plot([int(r["step"]) for r in rows], [float(r["eval_return"]) for r in rows],
                label=Path(p).stem, lw=1)
    ax.set_xlabel("environment steps")
    ax.set_ylabel("evaluation return")
    ax.set_title(title)
    ax.legend(fontsize=6)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)


# ---------------------------------------------------------------------------
# subcommands


def cmd_train(args) -> int:
    try:
        cfg = RunConfig.load(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        results = _run_seeds(cfg, cfg.agent_cfg)
    except (TrainingDiverged, FloatingPointError) as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return EXIT_NAN
    finals = np.array([r[2] for r in results])
    for seed, path, final in results:
        print(f"seed {seed}: final eval return {final:.4f} -> {path}")
    print(f"summary {cfg.env} {cfg.agent}: final eval return {finals.mean():.4f} +/- {finals.std():.4f} "
          f"over {len(finals)} seed(s)")
    if args.plot:
        out = cfg.output_dir() / f"{cfg.env}_{cfg.agent}_curves.png"
        _plot_curves([r[1] for r in results], out, f"{cfg.env} / {cfg.agent}")
        print(f"plot -> {out}")
    return EXIT_OK


BIAS_COLUMNS = ("seed", "step", "bias_shared", "bias_split", "eval_shared", "eval_split")


def cmd_bias_ablation(args) -> int:
    """Shared vs split policy networks under the same config and seeds."""
    try:
        cfg = RunConfig.load(args.config)
        if not cfg.agent.startswith("adac"):
            raise ConfigError("bias-ablation needs an adac-* agent")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    shared_cfg = AgentConfig.from_dict({**cfg.agent_config, "split_policy": False})
    split_cfg = AgentConfig.from_dict({**cfg.agent_config, "split_policy": True})
    try:
        shared = _run_seeds(cfg, shared_cfg, "-shared")
        split = _run_seeds(cfg, split_cfg, "-split")
    except (TrainingDiverged, FloatingPointError) as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return EXIT_NAN
    rows = []
    lower = 0
    for (seed, p_sh, _), (_, p_sp, _) in zip(shared, split):
        ev_sh, ev_sp = _read_evals(p_sh), _read_evals(p_sp)
        for a, b in zip(ev_sh, ev_sp):
            rows.append((seed, a["step"], a["policy_bias"], b["policy_bias"], a["eval_return"], b["eval_return"]))
        m_sh = np.mean([float(r["policy_bias"]) for r in ev_sh[1:]] or [np.nan])
        m_sp = np.mean([float(r["policy_bias"]) for r in ev_sp[1:]] or [np.nan])
        lower += bool(m_sh < m_sp)
        print(f"seed {seed}: mean policy bias shared {m_sh:.4f} split {m_sp:.4f}")
    out = cfg.output_dir() / f"{cfg.env}_{cfg.agent}_bias_ablation.csv"
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BIAS_COLUMNS)
        w.writerows(rows)
    print(f"shared bias lower in {lower}/{len(shared)} seeds -> {out}")
    return EXIT_OK


def _read_evals(path) -> list[dict]:
    with open(path) as fh:
        return [r for r in csv.DictReader(fh) if r["eval_return"]]


def cmd_svgd_toy(args) -> int:
    if args.target not in TOY_TARGETS:
        print(f"error: unknown target {args.target!r}; choose from {sorted(TOY_TARGETS)}", file=sys.stderr)
        return EXIT_CONFIG
    logp = TOY_TARGETS[args.target]()
    try:
        sampler = toy_fit(logp, args.beta, args.steps, n_particles=args.particles, seed=args.seed)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NAN
    rng = np.random.default_rng(args.seed + 1)
    x = sampler.sample(args.samples, rng)
    out = Path(os.environ.get("ADAC_OUT") or args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"toy_{args.target}_beta{args.beta:g}"
    np.savetxt(out / f"{stem}_samples.csv", x, fmt="%.17g", header="x", comments="")
    grid = np.linspace(-4.0, 4.0, 161)
    hist, edges = np.histogram(x, bins=160, range=(-4.0, 4.0), density=True)
    centers = (edges[:-1] + edges[1:]) / 2
    with open(out / f"{stem}_density.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("x", "target_density", "sample_density"))
        for c, h in zip(centers, hist):
            w.writerow((repr(float(c)), repr(float(np.exp(logp(c)))), repr(float(h))))
    left, right = mode_masses(x)
    print(f"{args.target} beta={args.beta:g}: mode mass left {left:.4f} right {right:.4f}, "
          f"mean {x.mean():.4f} std {x.std():.4f}, n={x.size}")
    if args.plot:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.hist(x, bins=160, range=(-4, 4), density=True, alpha=0.6, label="samples")
        ax.plot(grid, np.exp(logp(grid)), "k", lw=1, label="target")
        ax.set_title(f"{args.target}, beta={args.beta:g}")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / f"{stem}.png", dpi=120)
        plt.close(fig)
    return EXIT_OK


def _load_mdp(path) -> mdpcheck.FiniteMdp:
    with open(path) as fh:
        d = json.load(fh)
    return mdpcheck.FiniteMdp(np.array(d["P"]), np.array(d["R"]), np.array(d["R_prime"]),
                              float(d["gamma"]), np.array(d["beta0"]))


def cmd_verify(args) -> int:
    """Exit 0 iff no bound violation under the stated fixed-point construction and reading."""
    out = Path(os.environ.get("ADAC_OUT") or args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.mdp:
            mdp = _load_mdp(args.mdp)
            rows = []
            for construction in ("fixed_point", "arbitrary"):
                q = mdpcheck.seed_q(mdp, construction, np.random.default_rng(args.seed))
                for reading in ("theorem", "lemma"):
                    rep = mdpcheck.verify_theorem1(mdp, q, args.tol, reading)
                    lem = mdpcheck.verify_lemma1(mdp, q, reading)
                    rows.append(mdpcheck.report_row(0, construction, reading, mdp, rep, lem))
        else:
            rows = mdpcheck.verify_many(args.instances, args.seed, args.tol)
    except (mdpcheck.PreconditionError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    path = out / "verify.csv"
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=mdpcheck.VERIFY_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    summary = mdpcheck.summarize(rows, args.tol)
    for (construction, reading), s in sorted(summary.items()):
        print(f"{construction:11s} {reading:7s} n={s['instances']} stability violations={s['stability']} "
              f"effectiveness violations={s['effectiveness']} flipped-sign stability violations="
              f"{s['stability_flipped']} max lemma discrepancy={s['max_lemma_discrepancy']:.3g}")
    stated = summary.get(("fixed_point", "theorem"), dict(stability=0, effectiveness=0))
    violations = stated["stability"] + stated["effectiveness"]
    print(f"stated construction violations: {violations} -> {path}")
    return EXIT_OK if violations == 0 else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adac", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train one agent over the configured seeds")
    t.add_argument("config")
    t.add_argument("--plot", action="store_true", help="also write a learning-curve PNG")
    t.set_defaults(func=cmd_train)

    b = sub.add_parser("bias-ablation", help="shared vs split policy network")
    b.add_argument("config")
    b.set_defaults(func=cmd_bias_ablation)

    s = sub.add_parser("svgd-toy", help="amortized SVGD on a 1-D target")
    s.add_argument("--target", default="bimodal")
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--steps", type=int, default=3000)
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--particles", type=int, default=32)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="runs/toy")
    s.add_argument("--plot", action="store_true")
    s.set_defaults(func=cmd_svgd_toy)

    v = sub.add_parser("verify", help="check the critic-bounding bounds on random finite MDPs")
    v.add_argument("--instances", type=int, default=1000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--tol", type=float, default=1e-9)
    v.add_argument("--mdp", help="JSON file with P, R, R_prime, gamma, beta0 instead of random instances")
    v.add_argument("--out", default="runs/verify")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
