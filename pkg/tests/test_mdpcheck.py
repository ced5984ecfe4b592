import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adac import mdpcheck as mc


def one_state(R=1.0, Rp=None, gamma=0.5):
    Rp = R if Rp is None else Rp
    return mc.FiniteMdp(np.ones((1, 1, 1)), [[R]], [[Rp]], gamma, [[1.0]])


def rand(seed, S=5, A=3, gamma=0.9):
    return mc.random_mdp(np.random.default_rng(seed), S, A, gamma)


def brute_value_iteration(pi, R, mdp, iters=10_000):
    Q = np.zeros_like(mdp.R)
    for _ in range(iters):
        Q = mc.bellman_policy(Q, pi, R, mdp)
    return Q


# validation

def test_mdp_validation():
    with pytest.raises(ValueError, match="distributions"):
        mc.FiniteMdp(np.full((2, 1, 2), 0.6), [[0.0], [0.0]], [[0.0], [0.0]], 0.5, [[0.5], [0.5]])
    with pytest.raises(ValueError, match="gamma"):
        one_state(gamma=1.0)
    mdp = rand(0)
    assert np.all(mdp.R_prime >= mdp.R)
    assert np.all(mdp.R_prime - mdp.R <= 0.5)


# operators

def test_bellman_policy_examples():
    mdp = one_state()
    q1 = mc.bellman_policy([[0.0]], [0], mdp.R, mdp)
    assert q1[0, 0] == 1.0
    assert mc.bellman_policy(q1, [0], mdp.R, mdp)[0, 0] == 1.5
    m0 = rand(1, gamma=0.0)
    Q = np.random.default_rng(0).normal(size=m0.R.shape)
    np.testing.assert_array_equal(mc.bellman_policy(Q, mc.greedy(Q), m0.R, m0), m0.R)
    np.testing.assert_array_equal(mc.bellman_max(Q, m0.R, m0), m0.R)


def test_bellman_policy_rejects_bad_policy():
    mdp = rand(2, S=2, A=2)
    with pytest.raises(ValueError):
        mc.bellman_policy(np.zeros((2, 2)), np.array([[0.7, 0.7], [0.5, 0.5]]), mdp.R, mdp)


def test_bellman_max_constant_q():
    mdp = rand(3)
    np.testing.assert_allclose(mc.bellman_max(np.full(mdp.R.shape, 2.0), mdp.R, mdp), mdp.R + mdp.gamma * 2.0)


def test_bellman_max_two_state_enumeration():
    mdp = rand(4, S=2, A=2)
    Q = np.random.default_rng(1).normal(size=(2, 2))
    expect = np.zeros((2, 2))
    for s in range(2):
        for a in range(2):
            expect[s, a] = mdp.R[s, a] + mdp.gamma * sum(
                mdp.P[s, a, s2] * max(Q[s2, 0], Q[s2, 1]) for s2 in range(2))
    np.testing.assert_allclose(mc.bellman_max(Q, mdp.R, mdp), expect, rtol=1e-15)


def test_stochastic_policy_operator():
    mdp = rand(5, S=3, A=2)
    pi = np.array([[0.25, 0.75], [1.0, 0.0], [0.5, 0.5]])
    Q = np.random.default_rng(2).normal(size=(3, 2))
    expect = mdp.R + mdp.gamma * np.einsum("sat,tb,tb->sa", mdp.P, pi, Q)
    np.testing.assert_allclose(mc.bellman_policy(Q, pi, mdp.R, mdp), expect, rtol=1e-14)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_operators_are_contractions(seed):
    rng = np.random.default_rng(seed)
    mdp = mc.random_instance(rng)
    Q1, Q2 = rng.normal(size=mdp.R.shape), rng.normal(size=mdp.R.shape)
    pi = rng.integers(0, mdp.n_actions, mdp.n_states)
    gap = np.abs(Q1 - Q2).max()
    assert np.abs(mc.bellman_policy(Q1, pi, mdp.R, mdp) - mc.bellman_policy(Q2, pi, mdp.R, mdp)).max() \
        <= mdp.gamma * gap + 1e-12
    assert np.abs(mc.bellman_max(Q1, mdp.R, mdp) - mc.bellman_max(Q2, mdp.R, mdp)).max() <= mdp.gamma * gap + 1e-12


def test_fixed_point_examples():
    assert mc.fixed_point([0], [[1.0]], one_state())[0, 0] == pytest.approx(2.0, abs=1e-15)
    m0 = rand(6, gamma=0.0)
    np.testing.assert_allclose(mc.fixed_point(mc.greedy(m0.R), m0.R, m0), m0.R)
    mdp = rand(7)
    pi = mc.greedy(mdp.R)
    Q = mc.fixed_point(pi, mdp.R, mdp)
    assert np.abs(mc.bellman_policy(Q, pi, mdp.R, mdp) - Q).max() < 1e-10
    np.testing.assert_allclose(Q, brute_value_iteration(pi, mdp.R, mdp), atol=1e-8)


def test_occupancy_examples():
    assert mc.occupancy([0], [[1.0]], one_state())[0, 0] == pytest.approx(1.0)
    mdp = rand(8, gamma=0.0)
    np.testing.assert_allclose(mc.occupancy(mc.greedy(mdp.R), mdp.beta0, mdp), mdp.beta0)
    mdp = rand(9)
    assert mc.occupancy(mc.greedy(mdp.R), mdp.beta0, mdp).sum() == pytest.approx(1.0, abs=1e-10)


def test_occupancy_monte_carlo():
    """Geometric-horizon rollouts: stop with prob 1 - gamma after each step, record the pair."""
    mdp = rand(10, S=4, A=2, gamma=0.8)
    pi = np.array([1, 0, 1, 0])
    rng = np.random.default_rng(11)
    n = 1_000_000
    S, A = mdp.R.shape
    start = rng.choice(S * A, size=n, p=mdp.beta0.ravel())
    s, a = start // A, start % A
    alive = np.ones(n, bool)
    final = np.empty(n, int)
    cdf = np.cumsum(mdp.P, axis=2)
    while alive.any():
        idx = np.flatnonzero(alive)
        stop = rng.random(idx.size) > mdp.gamma
        final[idx[stop]] = s[idx[stop]] * A + a[idx[stop]]
        alive[idx[stop]] = False
        go = idx[~stop]
        u = rng.random(go.size)
        s_next = np.minimum((u[:, None] > cdf[s[go], a[go]]).sum(axis=1), S - 1)
        s[go], a[go] = s_next, pi[s_next]
    freq = np.bincount(final, minlength=S * A) / n
    rho = mc.occupancy(pi, mdp.beta0, mdp).ravel()
    assert 0.5 * np.abs(freq - rho).sum() < 0.01


def test_greedy():
    np.testing.assert_array_equal(mc.greedy([[1, 3, 2]]), [1])
    np.testing.assert_array_equal(mc.greedy([[5, 5, 5]]), [0])
    Q = np.random.default_rng(3).normal(size=(6, 4))
    shift = np.random.default_rng(4).normal(size=(6, 1))
    np.testing.assert_array_equal(mc.greedy(Q + shift), mc.greedy(Q))


def test_policy_iteration_is_optimal():
    mdp = rand(12)
    pi, Q = mc.policy_iteration(mdp.R, mdp)
    np.testing.assert_array_equal(mc.greedy(Q), pi)
    Qstar = np.zeros_like(mdp.R)
    for _ in range(5000):
        Qstar = mc.bellman_max(Qstar, mdp.R, mdp)
    np.testing.assert_allclose(Q, Qstar, atol=1e-8)


# theorem / lemma

def test_theorem_precondition():
    mdp = rand(13)
    mdp.R_prime = mdp.R - 0.1
    with pytest.raises(mc.PreconditionError):
        mc.verify_theorem1(mdp, mc.seed_q(mdp, "fixed_point"))


def test_theorem_degenerate_equal_rewards():
    mdp = rand(14)
    mdp.R_prime = mdp.R.copy()
    rep = mc.verify_theorem1(mdp, mc.seed_q(mdp, "fixed_point"))
    assert rep.mu_equals_pi and rep.holds
    assert rep.stability_lhs == pytest.approx(rep.effectiveness_lhs, abs=1e-12)


def test_theorem_one_state():
    rep = mc.verify_theorem1(one_state(R=1.0, Rp=1.3), np.array([[0.7]]))
    assert rep.stability_margin == pytest.approx(0.0, abs=1e-12)
    assert rep.effectiveness_margin == pytest.approx(0.3, abs=1e-12)


def test_effectiveness_bound_and_flipped_stability_hold():
    rows = mc.verify_many(200, seed=1, constructions=("fixed_point",), readings=("theorem", "lemma"))
    assert all(r["effectiveness_holds"] for r in rows)
    assert all(r["stability_flipped_margin"] >= -1e-9 for r in rows)


def test_stability_bound_as_stated_fails_exactly_when_mu_differs():
    """At an optimal Q the Bellman gap is zero, so the stated bound needs E_rho_mu[R] >= E_rho_pi[R]."""
    rows = mc.verify_many(200, seed=2, constructions=("fixed_point",), readings=("theorem",))
    for r in rows:
        if r["mu_equals_pi"]:
            assert r["stability_holds"]
    assert any(not r["stability_holds"] for r in rows)


def test_lemma_identity():
    assert mc.verify_lemma1(one_state(1.0, 1.2), np.array([[0.4]])).discrepancy < 1e-12
    m0 = rand(15, gamma=0.0)
    assert mc.verify_lemma1(m0, m0.R).discrepancy < 1e-12
    rows = mc.verify_many(100, seed=3, readings=("lemma",))
    assert max(r["lemma_discrepancy"] for r in rows) < 1e-9


def test_lemma_theorem_reading_discrepancies_reported():
    rows = mc.verify_many(100, seed=4, readings=("theorem",))
    assert all(np.isfinite(r["lemma_discrepancy"]) for r in rows)
    assert max(r["lemma_discrepancy"] for r in rows) > 1e-6
