"""Reference implementations that share no code with the package.

Everything here is plain numpy with hand-written backprop and explicit loops,
so agreement with the autodiff path is meaningful evidence.
"""
from __future__ import annotations

import math

import numpy as np


def mlp_params(net):
    """[(W, b), ...] copied out of a package network."""
    ps = [p.data.copy() for p in net.parameters()]
    return list(zip(ps[0::2], ps[1::2]))


def mlp_forward(layers, x):
    """relu MLP, linear output. Returns output and the per-layer inputs/preactivations."""
    cache = []
    h = x
    for i, (w, b) in enumerate(layers):
        z = h @ w + b
        cache.append((h, z))
        h = np.maximum(z, 0.0) if i < len(layers) - 1 else z
    return h, cache


def mlp_backward(layers, cache, g_out):
    """Gradients of sum(g_out * out) w.r.t. every (W, b) and the input."""
    grads = [None] * len(layers)
    g = g_out
    for i in reversed(range(len(layers))):
        h, z = cache[i]
        if i < len(layers) - 1:
            g = g * (z > 0)
        w = layers[i][0]
        grads[i] = (h.T @ g, g.sum(axis=0))
        g = g @ w.T
    return grads, g


def policy_forward(layers, low, high, s, xi):
    x = np.concatenate([s, xi], axis=1)
    raw, cache = mlp_forward(layers, x)
    t = np.tanh(raw)
    half, mid = (high - low) / 2, (high + low) / 2
    return mid + half * t, (cache, t, half)


def policy_backward(layers, aux, g_act):
    cache, t, half = aux
    grads, _ = mlp_backward(layers, cache, g_act * half * (1 - t * t))
    return [g for pair in grads for g in pair]


def critic_action_grad(layers, s, a):
    x = np.concatenate([s, a], axis=1)
    out, cache = mlp_forward(layers, x)
    _, gx = mlp_backward(layers, cache, np.ones_like(out))
    return gx[:, s.shape[1]:]


def footnote_kernel(a, b, h):
    d = a - b
    return math.exp(-float(d @ d) / (2 * h * h)) / (math.sqrt(2 * math.pi) * h)


def brute_force_svgd(pol_layers, low, high, q_layers, states, xi, beta):
    """Double sum over particles, written loop by loop.

    grad = 1/(M K) sum_i sum_l  Delta_il . d f(s_i, xi_il)/d phi
    Delta_il = 1/K sum_j [ k(a_il, a_ij) dQ(s_i, a_ij)/da + beta k(a_il, a_ij) (a_il - a_ij) / h^2 ]
    """
    m, k, _ = xi.shape
    d = low.size
    h = d / k
    total = None
    for i in range(m):
        s_rep = np.repeat(states[i:i + 1], k, axis=0)
        acts, aux = policy_forward(pol_layers, low, high, s_rep, xi[i])
        dq = critic_action_grad(q_layers, s_rep, acts)
        deltas = np.zeros((k, d))
        for l in range(k):
            acc = np.zeros(d)
            for j in range(k):
                kv = footnote_kernel(acts[l], acts[j], h)
                acc += kv * dq[j] + beta * kv * (acts[l] - acts[j]) / (h * h)
            deltas[l] = acc / k
        g = policy_backward(pol_layers, aux, deltas / (m * k))
        total = g if total is None else [a + b for a, b in zip(total, g)]
    return total


def central_fd(fn, arr: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """d fn()/d arr by central differences, perturbing ``arr`` in place."""
    g = np.zeros_like(arr)
    for idx in np.ndindex(arr.shape):
        old = arr[idx]
        arr[idx] = old + h
        up = fn()
        arr[idx] = old - h
        down = fn()
        arr[idx] = old
        g[idx] = (up - down) / (2 * h)
    return g


def rel_err(a, b) -> float:
    a, b = np.ravel(a), np.ravel(b)
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    return 0.0 if scale == 0 else float(np.linalg.norm(a - b) / scale)
