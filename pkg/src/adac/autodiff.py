"""Minimal reverse-mode automatic differentiation over dense float64 arrays.

Every operation returns a new :class:`Tensor` that remembers its parents and a
closure mapping the output adjoint to parent adjoints. The tape is dynamic: it
exists only as links between tensors created during a forward pass, and each
node carries a global sequence number so that a backward sweep can visit nodes
in exact reverse creation order.

Broadcasting is limited to adding a bias row to every row of a batch.
"""
from __future__ import annotations

import itertools
from typing import Callable, Iterable, Sequence

import numpy as np

_counter = itertools.count()


class ShapeError(ValueError):
    """Raised when a primitive receives operands of incompatible shapes."""


def _shape_error(op: str, a: tuple, b: tuple) -> ShapeError:
    return ShapeError(f"{op}: incompatible shapes {a} and {b}")


class Tensor:
    """Dense array node.

    ``data`` is always a float64 ndarray. ``grad`` is allocated lazily by
    :func:`backward` for tensors created with ``requires_grad=True``.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_seq", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray, tuple], tuple] | None = None
        self._seq = next(_counter)
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag})"

    # operator sugar, all routed through the primitives below
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scale(self, -1.0)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data: np.ndarray, parents: tuple[Tensor, ...], backward) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.name = None
    out._seq = next(_counter)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    else:
        out.requires_grad = False
        out._parents = ()
        out._backward = None
    return out


# ---------------------------------------------------------------------------
# primitives


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise _shape_error("matmul", a.shape, b.shape)
    ad, bd = a.data, b.data
    return _node(ad @ bd, (a, b), lambda g, n: (g @ bd.T if n[0] else None, ad.T @ g if n[1] else None))


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Fused ``x @ w + b`` with ``b`` broadcast over rows."""
    x, w, b = as_tensor(x), as_tensor(w), as_tensor(b)
    if x.data.ndim != 2 or w.data.ndim != 2 or x.shape[1] != w.shape[0]:
        raise _shape_error("linear", x.shape, w.shape)
    if b.size != w.shape[1]:
        raise _shape_error("linear bias", w.shape, b.shape)
    xd, wd, bshape = x.data, w.data, b.shape

    def back(g, n):
        return (g @ wd.T if n[0] else None, xd.T @ g if n[1] else None,
                g.sum(axis=0).reshape(bshape) if n[2] else None)

    return _node(xd @ wd + b.data.reshape(1, -1), (x, w, b), back)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; ``b`` may be a bias of shape (k,) or (1, k) against (n, k)."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape == b.shape:
        return _node(a.data + b.data, (a, b), lambda g, n: (g, g))
    if a.data.ndim == 2 and b.data.ndim in (1, 2) and b.shape[-1] == a.shape[1] and b.size == a.shape[1]:
        bshape = b.shape
        return _node(a.data + b.data, (a, b), lambda g, n: (g, g.sum(axis=0).reshape(bshape) if n[1] else None))
    raise _shape_error("add", a.shape, b.shape)


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise _shape_error("sub", a.shape, b.shape)
    return _node(a.data - b.data, (a, b), lambda g, n: (g, -g if n[1] else None))


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise _shape_error("mul", a.shape, b.shape)
    ad, bd = a.data, b.data
    return _node(ad * bd, (a, b), lambda g, n: (g * bd if n[0] else None, g * ad if n[1] else None))


def scale(a: Tensor, c: float) -> Tensor:
    a = as_tensor(a)
    return _node(a.data * c, (a,), lambda g, n: (g * c,))


def tanh(a: Tensor) -> Tensor:
    a = as_tensor(a)
    y = np.tanh(a.data)
    return _node(y, (a,), lambda g, n: (g * (1.0 - y * y),))


def relu(a: Tensor) -> Tensor:
    a = as_tensor(a)
    y = np.maximum(a.data, 0.0)
    return _node(y, (a,), lambda g, n: (g * (y > 0),))


def exp(a: Tensor) -> Tensor:
    a = as_tensor(a)
    y = np.exp(a.data)
    return _node(y, (a,), lambda g, n: (g * y,))


def sum(a: Tensor) -> Tensor:  # noqa: A001 - mirrors numpy naming
    a = as_tensor(a)
    shape = a.shape
    return _node(np.array(a.data.sum()), (a,), lambda g, n: (np.full(shape, float(g)),))


def mean(a: Tensor) -> Tensor:
    a = as_tensor(a)
    shape, n = a.shape, a.size
    return _node(np.array(a.data.mean()), (a,), lambda g, _: (np.full(shape, float(g) / n),))


def sq_diff(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise ``(a - b)**2``."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise _shape_error("sq_diff", a.shape, b.shape)
    d = a.data - b.data

    def back(g, n):
        gd = 2.0 * g * d
        return gd, -gd if n[1] else None

    return _node(d * d, (a, b), back)


def concat(tensors: Sequence[Tensor]) -> Tensor:
    """Concatenate 2-D tensors along the feature axis."""
    ts = tuple(as_tensor(t) for t in tensors)
    rows = {t.shape[0] for t in ts if t.data.ndim == 2}
    if any(t.data.ndim != 2 for t in ts) or len(rows) != 1:
        raise _shape_error("concat", ts[0].shape, tuple(t.shape for t in ts[1:]))
    edges = [0]
    for t in ts:
        edges.append(edges[-1] + t.shape[1])

    def back(g, n):
        return tuple(g[:, lo:hi] if want else None for lo, hi, want in zip(edges, edges[1:], n))

    return _node(np.concatenate([t.data for t in ts], axis=1), ts, back)


# ---------------------------------------------------------------------------
# reverse sweep


def _topo(root: Tensor) -> list[Tensor]:
    """Ancestors of ``root`` that participate in differentiation, latest first."""
    seen: set[int] = set()
    nodes: list[Tensor] = []
    stack = [root]
    while stack:
        t = stack.pop()
        if id(t) in seen or not t.requires_grad:
            continue
        seen.add(id(t))
        nodes.append(t)
        stack.extend(t._parents)
    nodes.sort(key=lambda t: t._seq, reverse=True)
    return nodes


def _relevant(order: list[Tensor], targets: list[Tensor]) -> set[int]:
    """Nodes with a path to some target; adjoints elsewhere are never computed."""
    keep = {id(t) for t in targets}
    for node in reversed(order):
        if any(id(p) in keep for p in node._parents):
            keep.add(id(node))
    return keep


def _sweep(root: Tensor, seed: np.ndarray, targets: list[Tensor] | None = None
           ) -> tuple[list[Tensor], dict[int, np.ndarray]]:
    order = _topo(root)
    keep = _relevant(order, targets) if targets is not None else None
    adj: dict[int, np.ndarray] = {id(root): seed}
    for node in order:
        g = adj.get(id(node))
        if g is None or node._backward is None:
            continue
        if keep is None:
            need = tuple(p.requires_grad for p in node._parents)
        else:
            need = tuple(p.requires_grad and id(p) in keep for p in node._parents)
        for parent, pg, want in zip(node._parents, node._backward(g, need), need):
            if pg is None or not want:
                continue
            prev = adj.get(id(parent))
            adj[id(parent)] = pg if prev is None else prev + pg
    return order, adj


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into ``.grad`` of every leaf requiring grad."""
    if loss.size != 1:
        raise ValueError(f"backward: loss must be scalar, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    order, adj = _sweep(loss, np.ones_like(loss.data))
    for node in order:
        if node._backward is None and id(node) in adj:
            g = adj[id(node)]
            node.grad = g.copy() if node.grad is None else node.grad + g


def grad(output: Tensor, inputs: Iterable[Tensor] | Tensor, seed: np.ndarray | None = None):
    """Gradient of ``sum(seed * output)`` with respect to ``inputs``.

    Leaves' ``.grad`` fields are left untouched. Returns a single array when a
    single tensor is passed, else a list.
    """
    single = isinstance(inputs, Tensor)
    targets = [inputs] if single else list(inputs)
    seed = np.ones_like(output.data) if seed is None else np.asarray(seed, dtype=np.float64)
    if seed.shape != output.shape:
        raise _shape_error("grad seed", output.shape, seed.shape)
    if not output.requires_grad:
        raise ValueError("grad: output does not depend on any tensor requiring grad")
    order, adj = _sweep(output, seed, targets)
    members = {id(t) for t in order}
    result = []
    for t in targets:
        if id(t) not in members:
            raise ValueError(f"grad: {t!r} is not part of the output's graph")
        result.append(adj.get(id(t), np.zeros_like(t.data)))
    return result[0] if single else result


def grad_wrt_input(output: Tensor, inp: Tensor) -> np.ndarray:
    """d(sum output)/d(inp) for a batch output, e.g. a critic's action gradient."""
    return grad(output, inp)
