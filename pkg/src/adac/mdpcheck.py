"""Exact tabular checks of the critic-bounding bounds.

Q-tables are flattened to S*A vectors indexed ``s * A + a``. For a policy
table ``pi`` (S x A, rows are distributions) the operator ``P^pi`` is the
S*A x S*A matrix taking (s, a) to (s', a') with weight P(s'|s,a) pi(a'|s'),
so resolvents such as (I - gamma P^pi)^{-1} are literal matrix inverses.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class PreconditionError(ValueError):
    pass


@dataclass
class FiniteMdp:
    P: np.ndarray        # (S, A, S)
    R: np.ndarray        # (S, A)
    R_prime: np.ndarray  # (S, A)
    gamma: float
    beta0: np.ndarray    # (S, A) initial state-action distribution

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=np.float64)
        self.R = np.asarray(self.R, dtype=np.float64)
        self.R_prime = np.asarray(self.R_prime, dtype=np.float64)
        self.beta0 = np.asarray(self.beta0, dtype=np.float64)
        S, A = self.R.shape
        if self.P.shape != (S, A, S) or self.R_prime.shape != (S, A) or self.beta0.shape != (S, A):
            raise ValueError("FiniteMdp: inconsistent table shapes")
        if np.any(self.P < 0) or np.max(np.abs(self.P.sum(axis=2) - 1.0)) > 1e-12:
            raise ValueError("FiniteMdp: transition rows must be distributions")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"FiniteMdp: gamma must lie in [0, 1), got {self.gamma}")
        if np.any(self.beta0 < 0) or abs(self.beta0.sum() - 1.0) > 1e-12:
            raise ValueError("FiniteMdp: beta0 must be a distribution")

    @property
    def n_states(self) -> int:
        return self.R.shape[0]

    @property
    def n_actions(self) -> int:
        return self.R.shape[1]


def random_mdp(rng: np.random.Generator, n_states: int, n_actions: int, gamma: float) -> FiniteMdp:
    """Dirichlet(1) transitions, R ~ U[0,1], R' = R + U[0,0.5], Dirichlet(1) beta0 over S x A."""
    P = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    R = rng.uniform(0.0, 1.0, (n_states, n_actions))
    R_prime = R + rng.uniform(0.0, 0.5, (n_states, n_actions))
    beta0 = rng.dirichlet(np.ones(n_states * n_actions)).reshape(n_states, n_actions)
    return FiniteMdp(P, R, R_prime, gamma, beta0)


def random_instance(rng: np.random.Generator, max_states: int = 6, max_actions: int = 4,
                    gamma_range=(0.5, 0.95)) -> FiniteMdp:
    S = int(rng.integers(1, max_states + 1))
    A = int(rng.integers(1, max_actions + 1))
    return random_mdp(rng, S, A, float(rng.uniform(*gamma_range)))


# ---------------------------------------------------------------------------
# operators


def as_policy_table(pi, n_actions: int | None = None) -> np.ndarray:
    """Accept an (S,) integer action vector or an (S, A) stochastic table."""
    pi = np.asarray(pi)
    if pi.ndim == 1:
        if n_actions is None:
            raise ValueError("as_policy_table: n_actions needed for a deterministic policy")
        table = np.zeros((pi.size, n_actions))
        table[np.arange(pi.size), pi.astype(int)] = 1.0
        return table
    table = pi.astype(np.float64)
    if table.ndim != 2 or np.any(table < 0) or np.max(np.abs(table.sum(axis=1) - 1.0)) > 1e-9:
        raise ValueError("policy must be an (S, A) table of distributions")
    return table


def transition_matrix(pi, mdp: FiniteMdp) -> np.ndarray:
    """P^pi as an S*A x S*A matrix."""
    table = as_policy_table(pi, mdp.n_actions)
    if table.shape != mdp.R.shape:
        raise ValueError(f"policy shape {table.shape} does not match MDP {mdp.R.shape}")
    S, A = mdp.R.shape
    return np.einsum("ijk,kl->ijkl", mdp.P, table).reshape(S * A, S * A)


def bellman_policy(Q, pi, R, mdp: FiniteMdp) -> np.ndarray:
    Q = np.asarray(Q, dtype=np.float64)
    nxt = (transition_matrix(pi, mdp) @ Q.reshape(-1)).reshape(Q.shape)
    return np.asarray(R, dtype=np.float64) + mdp.gamma * nxt


def bellman_max(Q, R, mdp: FiniteMdp) -> np.ndarray:
    Q = np.asarray(Q, dtype=np.float64)
    return np.asarray(R, dtype=np.float64) + mdp.gamma * mdp.P @ Q.max(axis=1)


def resolvent(pi, mdp: FiniteMdp) -> np.ndarray:
    """(I - gamma P^pi)^{-1}."""
    n = mdp.n_states * mdp.n_actions
    return np.linalg.inv(np.eye(n) - mdp.gamma * transition_matrix(pi, mdp))


def fixed_point(pi, R, mdp: FiniteMdp) -> np.ndarray:
    """Solve Q = R + gamma P^pi Q directly."""
    R = np.asarray(R, dtype=np.float64)
    n = R.size
    A = np.eye(n) - mdp.gamma * transition_matrix(pi, mdp)
    try:
        q = np.linalg.solve(A, R.reshape(-1))
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"fixed_point: singular system ({exc})") from exc
    return q.reshape(R.shape)


def occupancy(pi, beta0, mdp: FiniteMdp) -> np.ndarray:
    """Normalized discounted state-action occupancy (1 - gamma) (I - gamma P^pi^T)^{-1} beta0."""
    beta0 = np.asarray(beta0, dtype=np.float64)
    n = beta0.size
    A = np.eye(n) - mdp.gamma * transition_matrix(pi, mdp).T
    return ((1.0 - mdp.gamma) * np.linalg.solve(A, beta0.reshape(-1))).reshape(beta0.shape)


def greedy(Q) -> np.ndarray:
    """Deterministic argmax policy; ties go to the lowest action index."""
    return np.argmax(np.asarray(Q), axis=1)


def policy_iteration(R, mdp: FiniteMdp, start=None, max_iter: int = 1000) -> tuple[np.ndarray, np.ndarray]:
    """Greedy-iterate pi <- greedy(fixed_point(pi, R)) until stable. Returns (pi, Q)."""
    pi = np.zeros(mdp.n_states, dtype=int) if start is None else np.asarray(start, dtype=int)
    for _ in range(max_iter):
        Q = fixed_point(pi, R, mdp)
        # keep the incumbent action unless another one is strictly better, so the loop terminates
        best = Q.max(axis=1)
        keep = Q[np.arange(mdp.n_states), pi] >= best - 1e-12 * (1 + np.abs(best))
        new = np.where(keep, pi, greedy(Q))
        if np.array_equal(new, pi):
            return pi, Q
        pi = new
    raise RuntimeError("policy_iteration did not converge")


# ---------------------------------------------------------------------------
# theorem and lemma checks


@dataclass
class Theorem1Report:
    stability_lhs: float
    stability_rhs: float
    effectiveness_lhs: float
    effectiveness_rhs: float
    # bound (i) with the reward term's sign flipped, E_rho_mu[R] - E_rho_pi[R]
    stability_rhs_flipped: float
    tol: float
    mu_equals_pi: bool

    @property
    def stability_margin(self) -> float:
        return self.stability_lhs - self.stability_rhs

    @property
    def effectiveness_margin(self) -> float:
        return self.effectiveness_lhs - self.effectiveness_rhs

    @property
    def stability_flipped_margin(self) -> float:
        return self.stability_lhs - self.stability_rhs_flipped

    @property
    def stability_holds(self) -> bool:
        return self.stability_margin >= -self.tol

    @property
    def effectiveness_holds(self) -> bool:
        return self.effectiveness_margin >= -self.tol

    @property
    def holds(self) -> bool:
        return self.stability_holds and self.effectiveness_holds


def _check_rewards(mdp: FiniteMdp) -> None:
    if np.any(mdp.R_prime < mdp.R):
        raise PreconditionError("R' must dominate R everywhere")


def _behavior_policy(pi, mdp: FiniteMdp, reading: str) -> tuple[np.ndarray, np.ndarray]:
    """mu and the primed critic under either reading of its definition.

    ``"theorem"``: the primed critic is the fixed point of T^pi_{R'} and mu is greedy on it.
    ``"lemma"``: the primed critic is the fixed point of T^mu_{R'} with mu greedy on it, i.e.
    policy iteration on R' started from pi.
    """
    if reading == "theorem":
        Qp = fixed_point(pi, mdp.R_prime, mdp)
        return greedy(Qp), Qp
    if reading == "lemma":
        return policy_iteration(mdp.R_prime, mdp, start=pi)
    raise ValueError(f"unknown reading {reading!r}; use 'theorem' or 'lemma'")


def verify_theorem1(mdp: FiniteMdp, Q_seed, tol: float = 1e-9, reading: str = "theorem") -> Theorem1Report:
    _check_rewards(mdp)
    Q = np.asarray(Q_seed, dtype=np.float64)
    pi = greedy(Q)
    mu, _ = _behavior_policy(pi, mdp, reading)
    rho_pi = occupancy(pi, mdp.beta0, mdp)
    rho_mu = occupancy(mu, mdp.beta0, mdp)
    gap = bellman_max(Q, mdp.R, mdp) - Q
    e_pi_gap, e_mu_gap = float(np.sum(rho_pi * gap)), float(np.sum(rho_mu * gap))
    e_pi_r, e_mu_r = float(np.sum(rho_pi * mdp.R)), float(np.sum(rho_mu * mdp.R))
    e_pi_rr = float(np.sum(rho_pi * (mdp.R - mdp.R_prime)))
    return Theorem1Report(
        stability_lhs=e_pi_gap,
        stability_rhs=e_mu_gap + e_pi_r - e_mu_r,
        effectiveness_lhs=e_mu_gap,
        effectiveness_rhs=e_pi_gap + e_pi_rr,
        stability_rhs_flipped=e_mu_gap + e_mu_r - e_pi_r,
        tol=tol,
        mu_equals_pi=bool(np.array_equal(mu, pi)),
    )


@dataclass
class Lemma1Report:
    lhs: np.ndarray
    rhs: np.ndarray
    reading: str

    @property
    def discrepancy(self) -> float:
        return float(np.max(np.abs(self.lhs - self.rhs)))


def verify_lemma1(mdp: FiniteMdp, Q_seed, reading: str = "lemma") -> Lemma1Report:
    """Both sides of the lemma's identity as S x A tables.

    lhs = Q'_primed - Q^pi_*,
    rhs = [(I - g P^mu)^-1 - (I - g P^pi)^-1](T^max_R Q - Q) - (I - g P^mu)^-1 (T^max_R Q - T^mu_{R'} Q).
    """
    _check_rewards(mdp)
    Q = np.asarray(Q_seed, dtype=np.float64)
    pi = greedy(Q)
    mu, Q_primed = _behavior_policy(pi, mdp, reading)
    Q_star = fixed_point(pi, mdp.R, mdp)
    T_max = bellman_max(Q, mdp.R, mdp)
    inv_mu, inv_pi = resolvent(mu, mdp), resolvent(pi, mdp)
    gap = (T_max - Q).reshape(-1)
    cross = (T_max - bellman_policy(Q, mu, mdp.R_prime, mdp)).reshape(-1)
    rhs = (inv_mu - inv_pi) @ gap - inv_mu @ cross
    return Lemma1Report(lhs=Q_primed - Q_star, rhs=rhs.reshape(Q.shape), reading=reading)


def seed_q(mdp: FiniteMdp, construction: str, rng: np.random.Generator | None = None) -> np.ndarray:
    """Q^pi_R for a check.

    ``"fixed_point"``: the fixed point of T^pi_R for the greedy-iterated pi (so pi is greedy on it).
    ``"arbitrary"``: a uniform random table; pi is simply greedy on it.
    """
    if construction == "fixed_point":
        return policy_iteration(mdp.R, mdp)[1]
    if construction == "arbitrary":
        rng = np.random.default_rng(0) if rng is None else rng
        scale = 1.0 / (1.0 - mdp.gamma)
        return rng.uniform(0.0, scale, mdp.R.shape)
    raise ValueError(f"unknown construction {construction!r}")


VERIFY_COLUMNS = ("instance", "construction", "reading", "n_states", "n_actions", "gamma", "mu_equals_pi",
                  "stability_margin", "effectiveness_margin", "stability_flipped_margin",
                  "stability_holds", "effectiveness_holds", "lemma_discrepancy")


def report_row(instance: int, construction: str, reading: str, mdp: FiniteMdp,
               rep: Theorem1Report, lem: Lemma1Report) -> dict:
    return dict(instance=instance, construction=construction, reading=reading,
                n_states=mdp.n_states, n_actions=mdp.n_actions, gamma=mdp.gamma,
                mu_equals_pi=rep.mu_equals_pi,
                stability_margin=rep.stability_margin,
                effectiveness_margin=rep.effectiveness_margin,
                stability_flipped_margin=rep.stability_flipped_margin,
                stability_holds=rep.stability_holds,
                effectiveness_holds=rep.effectiveness_holds,
                lemma_discrepancy=lem.discrepancy)


def verify_many(n_instances: int, seed: int, tol: float = 1e-9,
                constructions=("fixed_point", "arbitrary"), readings=("theorem", "lemma")) -> list[dict]:
    """One row per (instance, construction, reading)."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_instances):
        mdp = random_instance(rng)
        for construction in constructions:
            Q = seed_q(mdp, construction, rng)
            for reading in readings:
                rows.append(report_row(i, construction, reading, mdp, verify_theorem1(mdp, Q, tol, reading),
                                       verify_lemma1(mdp, Q, reading)))
    return rows


def summarize(rows: list[dict], tol: float = 1e-9) -> dict:
    """Violation counts keyed by (construction, reading)."""
    out: dict = {}
    for r in rows:
        key = (r["construction"], r["reading"])
        d = out.setdefault(key, dict(instances=0, stability=0, effectiveness=0, stability_flipped=0,
                                     max_lemma_discrepancy=0.0))
        d["instances"] += 1
        d["stability"] += not r["stability_holds"]
        d["effectiveness"] += not r["effectiveness_holds"]
        d["stability_flipped"] += r["stability_flipped_margin"] < -tol
        d["max_lemma_discrepancy"] = max(d["max_lemma_discrepancy"], r["lemma_discrepancy"])
    return out
