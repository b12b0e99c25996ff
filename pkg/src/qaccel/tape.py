"""Minimal reverse-mode autodiff over numpy arrays.

Just enough machinery to differentiate the surrogate-network losses exactly
with respect to the network weights, *including* loss terms built from
input-Jacobians and directional second derivatives: those quantities are
expressed on the tape through the same primitive ops (matmul, tanh,
elementwise arithmetic, slicing), so one reverse pass yields the full
higher-order mixed derivatives.

Not a general framework: 1-D/2-D arrays, fixed op set, no in-place mutation.
"""

from __future__ import annotations

import numpy as np


class Var:
    """A node in the computation graph."""

    __slots__ = ("value", "grad", "parents", "backward_fn")

    def __init__(self, value, parents=(), backward_fn=None):
        self.value = np.asarray(value, dtype=float)
        self.grad = None
        self.parents = parents
        self.backward_fn = backward_fn

    # -- operator sugar -----------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    @property
    def shape(self):
        return self.value.shape


def as_var(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape` (reverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a, b) -> Var:
    a, b = as_var(a), as_var(b)

    def bw(g):
        return _unbroadcast(g, a.value.shape), _unbroadcast(g, b.value.shape)

    return Var(a.value + b.value, (a, b), bw)


def sub(a, b) -> Var:
    a, b = as_var(a), as_var(b)

    def bw(g):
        return _unbroadcast(g, a.value.shape), _unbroadcast(-g, b.value.shape)

    return Var(a.value - b.value, (a, b), bw)


def mul(a, b) -> Var:
    a, b = as_var(a), as_var(b)

    def bw(g):
        return (
            _unbroadcast(g * b.value, a.value.shape),
            _unbroadcast(g * a.value, b.value.shape),
        )

    return Var(a.value * b.value, (a, b), bw)


def matmul(a, b) -> Var:
    a, b = as_var(a), as_var(b)
    av, bv = a.value, b.value

    def bw(g):
        if av.ndim == 2 and bv.ndim == 1:
            return np.outer(g, bv), av.T @ g
        if av.ndim == 2 and bv.ndim == 2:
            return g @ bv.T, av.T @ g
        if av.ndim == 1 and bv.ndim == 1:  # inner product
            return g * bv, g * av
        if av.ndim == 1 and bv.ndim == 2:
            return g @ bv.T, np.outer(av, g)
        raise NotImplementedError(f"matmul backward for {av.ndim}D @ {bv.ndim}D")

    return Var(av @ bv, (a, b), bw)


def tanh(a) -> Var:
    a = as_var(a)
    t = np.tanh(a.value)

    def bw(g):
        return (g * (1.0 - t * t),)

    return Var(t, (a,), bw)


def square(a) -> Var:
    a = as_var(a)

    def bw(g):
        return (g * 2.0 * a.value,)

    return Var(a.value * a.value, (a,), bw)


def vsum(a) -> Var:
    a = as_var(a)

    def bw(g):
        return (np.broadcast_to(g, a.value.shape).copy(),)

    return Var(a.value.sum(), (a,), bw)


def getitem(a, idx) -> Var:
    a = as_var(a)

    def bw(g):
        out = np.zeros_like(a.value)
        np.add.at(out, idx, g)
        return (out,)

    return Var(a.value[idx], (a,), bw)


def concat(parts: list) -> Var:
    parts = [as_var(p) for p in parts]
    sizes = [p.value.size for p in parts]

    def bw(g):
        grads = []
        offset = 0
        for size in sizes:
            grads.append(g[offset : offset + size])
            offset += size
        return tuple(grads)

    return Var(np.concatenate([p.value.ravel() for p in parts]), tuple(parts), bw)


def reshape(a, shape) -> Var:
    a = as_var(a)

    def bw(g):
        return (g.reshape(a.value.shape),)

    return Var(a.value.reshape(shape), (a,), bw)


def backward(root: Var) -> None:
    """Accumulate d(root)/d(node) into `.grad` of every reachable node."""
    order: list[Var] = []
    seen: set[int] = set()
    stack: list[tuple[Var, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    for node in order:
        node.grad = None
    root.grad = np.ones_like(root.value)
    for node in reversed(order):
        if node.grad is None or node.backward_fn is None:
            continue
        for parent, g in zip(node.parents, node.backward_fn(node.grad)):
            if parent.grad is None:
                parent.grad = np.zeros_like(parent.value)
            parent.grad += g


def gradient(root: Var, wrt: list) -> list:
    """Gradient of a scalar root with respect to the given leaf Vars."""
    backward(root)
    return [
        w.grad if w.grad is not None else np.zeros_like(w.value) for w in wrt
    ]
