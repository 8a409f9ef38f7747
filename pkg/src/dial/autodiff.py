"""Minimal reverse-mode differentiation over float64 numpy arrays.

Nodes are created by the op functions below. A node only records its parents
(and a vector-Jacobian closure) when at least one input requires a gradient,
so evaluation with constant parameters builds no graph at all.

The gradient penalty needs the critic's input-gradient to be differentiable in
the critic weights. Rather than general second-order autodiff,
:func:`input_gradient_graph` writes that gradient out as an ordinary graph of
first-order ops, which :func:`grad` can then differentiate.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

_ids = itertools.count()

NORM_EPS = 1e-12


class ShapeError(ValueError):
    def __init__(self, op: str, *shapes):
        self.op = op
        self.shapes = shapes
        super().__init__(f"{op}: incompatible shapes " + " and ".join(str(tuple(s)) for s in shapes))


class Node:
    __slots__ = ("id", "op", "value", "parents", "vjp", "requires_grad")

    def __init__(self, value, op="leaf", parents=(), vjp=None, requires_grad=False):
        self.id = next(_ids)
        self.op = op
        self.value = np.asarray(value, dtype=np.float64)
        self.parents = parents
        self.vjp = vjp
        self.requires_grad = requires_grad

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self):
        return f"Node(op={self.op!r}, shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, other)
        return mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return take(self, idx)

    @property
    def T(self):
        return transpose(self)


def param(value) -> Node:
    """Leaf that requires a gradient."""
    return Node(np.array(value, dtype=np.float64), requires_grad=True)


def const(value) -> Node:
    return value if isinstance(value, Node) else Node(value, op="const")


def _as_node(x) -> Node:
    return x if isinstance(x, Node) else Node(x, op="const")


def _make(value, op, parents, vjp) -> Node:
    if any(p.requires_grad for p in parents):
        return Node(value, op, tuple(parents), vjp, True)
    return Node(value, op)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _broadcast_shape(op, a, b):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(op, a.shape, b.shape) from None


# ---------------------------------------------------------------- primitives


def add(a, b) -> Node:
    a, b = _as_node(a), _as_node(b)
    _broadcast_shape("add", a, b)
    sa, sb = a.shape, b.shape
    return _make(a.value + b.value, "add", (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Node:
    a, b = _as_node(a), _as_node(b)
    _broadcast_shape("subtract", a, b)
    sa, sb = a.shape, b.shape
    return _make(a.value - b.value, "subtract", (a, b), lambda g: (_unbroadcast(g, sa), -_unbroadcast(g, sb)))


def mul(a, b) -> Node:
    """Elementwise product (numpy broadcasting)."""
    a, b = _as_node(a), _as_node(b)
    _broadcast_shape("multiply", a, b)
    av, bv = a.value, b.value
    return _make(av * bv, "multiply", (a, b),
                 lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)))


def scale(a, c: float) -> Node:
    a = _as_node(a)
    c = float(c)
    return _make(a.value * c, "scalar_multiply", (a,), lambda g: (g * c,))


def matmul(a, b) -> Node:
    a, b = _as_node(a), _as_node(b)
    av, bv = a.value, b.value
    if av.ndim not in (1, 2) or bv.ndim not in (1, 2) or av.shape[-1] != bv.shape[0]:
        raise ShapeError("matrix_multiply", av.shape, bv.shape)

    def vjp(g):
        if av.ndim == 2 and bv.ndim == 2:
            return g @ bv.T, av.T @ g
        if av.ndim == 2:
            return np.outer(g, bv), av.T @ g
        if bv.ndim == 2:
            return bv @ g, np.outer(av, g)
        return g * bv, g * av

    return _make(av @ bv, "matrix_multiply", (a, b), vjp)


def transpose(a) -> Node:
    a = _as_node(a)
    if a.value.ndim != 2:
        raise ShapeError("transpose", a.shape)
    return _make(a.value.T, "transpose", (a,), lambda g: (g.T,))


def reshape(a, shape) -> Node:
    a = _as_node(a)
    old = a.shape
    try:
        value = a.value.reshape(shape)
    except ValueError:
        raise ShapeError("reshape", old, tuple(shape)) from None
    return _make(value, "reshape", (a,), lambda g: (g.reshape(old),))


def concat(nodes: Sequence, axis: int = 0) -> Node:
    nodes = [_as_node(n) for n in nodes]
    try:
        value = np.concatenate([n.value for n in nodes], axis=axis)
    except ValueError:
        raise ShapeError("concat", *[n.shape for n in nodes]) from None
    sizes = np.cumsum([n.shape[axis] for n in nodes])[:-1]
    return _make(value, "concat", nodes, lambda g: tuple(np.split(g, sizes, axis=axis)))


def take(a, idx) -> Node:
    """Slice / index. Gradient scatters back with accumulation for repeated indices."""
    a = _as_node(a)
    try:
        value = a.value[idx]
    except IndexError:
        raise ShapeError("slice", a.shape) from None
    shape = a.shape

    def vjp(g):
        out = np.zeros(shape)
        np.add.at(out, idx, g)
        return (out,)

    return _make(value, "slice", (a,), vjp)


def sum(a, axis=None) -> Node:  # noqa: A001
    a = _as_node(a)
    shape = a.shape

    def vjp(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return _make(a.value.sum(axis=axis), "sum", (a,), vjp)


def mean(a, axis=None) -> Node:
    a = _as_node(a)
    if a.value.size == 0:
        raise ShapeError("mean", a.shape)
    n = a.value.size if axis is None else a.shape[axis]
    return scale(sum(a, axis=axis), 1.0 / n)


def square(a) -> Node:
    a = _as_node(a)
    av = a.value
    return _make(av * av, "square", (a,), lambda g: (2.0 * av * g,))


def euclidean_norm(a, axis=None, eps: float = NORM_EPS) -> Node:
    """sqrt(sum(a**2) + eps); eps keeps the gradient defined at the origin."""
    if eps <= 0:
        raise ValueError("euclidean_norm needs eps > 0")
    a = _as_node(a)
    av = a.value
    n = np.sqrt((av * av).sum(axis=axis) + eps)

    def vjp(g):
        gg, nn = (g, n) if axis is None else (np.expand_dims(g, axis), np.expand_dims(n, axis))
        return (gg * av / nn,)

    return _make(n, "euclidean_norm", (a,), vjp)


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(a) -> Node:
    a = _as_node(a)
    s = _sigmoid(a.value)
    return _make(s, "sigmoid", (a,), lambda g: (g * s * (1.0 - s),))


def log_sigmoid(a) -> Node:
    a = _as_node(a)
    av = a.value
    value = -np.logaddexp(0.0, -av)
    return _make(value, "log_sigmoid", (a,), lambda g: (g * _sigmoid(-av),))


# ---------------------------------------------------------------- activations


@dataclass(frozen=True)
class Activation:
    name: str
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    d2f: Callable[[np.ndarray], np.ndarray] | None = None


ACTIVATIONS: dict[str, Activation] = {}


def register_activation(name, f, df, d2f=None) -> Activation:
    act = Activation(name, f, df, d2f)
    ACTIVATIONS[name] = act
    return act


def get_activation(name: str) -> Activation:
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise KeyError(f"unknown activation {name!r}") from None


_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_A = 0.044715


def _gelu_parts(x):
    u = _GELU_C * (x + _GELU_A * x**3)
    du = _GELU_C * (1.0 + 3.0 * _GELU_A * x**2)
    return np.tanh(u), du


def gelu_value(x):
    t, _ = _gelu_parts(x)
    return 0.5 * x * (1.0 + t)


def gelu_d1(x):
    t, du = _gelu_parts(x)
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du


def gelu_d2(x):
    t, du = _gelu_parts(x)
    d2u = _GELU_C * 6.0 * _GELU_A * x
    sech2 = 1.0 - t * t
    return sech2 * (du + 0.5 * x * (d2u - 2.0 * t * du * du))


register_activation("gelu", gelu_value, gelu_d1, gelu_d2)
register_activation("identity", lambda x: x, np.ones_like, np.zeros_like)
register_activation("tanh", np.tanh, lambda x: 1.0 - np.tanh(x) ** 2,
                    lambda x: -2.0 * np.tanh(x) * (1.0 - np.tanh(x) ** 2))
register_activation("square", lambda x: x * x, lambda x: 2.0 * x, lambda x: np.full_like(x, 2.0))
# relu' is a step function, so it cannot appear inside a differentiated input-gradient
register_activation("relu", lambda x: np.maximum(x, 0.0), lambda x: (x > 0).astype(np.float64))


def activate(name: str, a) -> Node:
    act = get_activation(name)
    a = _as_node(a)
    av = a.value
    return _make(act.f(av), name, (a,), lambda g: (g * act.df(av),))


def activate_derivative(name: str, a) -> Node:
    """Elementwise f'(a) as a node whose own gradient uses f''."""
    act = get_activation(name)
    if act.d2f is None:
        raise ValueError(f"activation {name!r} has no registered second derivative")
    a = _as_node(a)
    av = a.value
    return _make(act.df(av), f"d_{name}", (a,), lambda g: (g * act.d2f(av),))


def gelu(a) -> Node:
    return activate("gelu", a)


# ---------------------------------------------------------------- MLP helpers

Layers = Sequence[tuple[Node, Node]]


def mlp_forward(layers: Layers, activations: Sequence[str], x) -> Node:
    """Affine layers ``h @ W + b`` each followed by its activation."""
    if len(layers) != len(activations):
        raise ValueError("one activation per layer required")
    h = _as_node(x)
    for (w, b), act in zip(layers, activations):
        h = add(matmul(h, w), b)
        if act != "identity":
            h = activate(act, h)
    return h


def input_gradient_graph(layers: Layers, activations: Sequence[str], z) -> Node:
    """Row-wise gradient of a scalar-output MLP with respect to its input.

    For ``z`` of shape (n, d) returns an (n, d) node whose row i is the gradient
    of the MLP output at ``z[i]``. Built from first-order ops only, so it can be
    differentiated again with respect to the layer parameters.
    """
    for act in activations:
        if get_activation(act).d2f is None:
            raise ValueError(f"activation {act!r} has no registered second derivative")
    if len(layers) != len(activations):
        raise ValueError("one activation per layer required")
    z = _as_node(z)
    single = z.value.ndim == 1
    if single:
        z = reshape(z, (1, -1))
    if layers[-1][0].shape[1] != 1:
        raise ShapeError("input_gradient_graph", layers[-1][0].shape, (None, 1))

    pre = []
    h = z
    for (w, b), act in zip(layers, activations):
        a = add(matmul(h, w), b)
        pre.append(a)
        h = a if act == "identity" else activate(act, a)

    g = const(np.ones((z.shape[0], 1)))
    for (w, _), act, a in zip(reversed(layers), reversed(activations), reversed(pre)):
        if act != "identity":
            g = mul(g, activate_derivative(act, a))
        g = matmul(g, transpose(w))
    return reshape(g, (-1,)) if single else g


# ---------------------------------------------------------------- backward


def _topo_order(root: Node) -> list[Node]:
    order: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if node.id in seen:
            continue
        seen.add(node.id)
        stack.append((node, True))
        for p in reversed(node.parents):
            if p.requires_grad and p.id not in seen:
                stack.append((p, False))
    return order


def grad(loss: Node, wrt: Sequence[Node]) -> list[np.ndarray]:
    """Gradients of a scalar ``loss`` with respect to each node in ``wrt``.

    Contributions from every path are summed. Nodes the loss does not depend
    on get a zero array.
    """
    if loss.value.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {}
    if loss.requires_grad:
        grads[loss.id] = np.ones_like(loss.value)
        for node in reversed(_topo_order(loss)):
            g = grads.get(node.id)
            if g is None or node.vjp is None:
                continue
            for p, pg in zip(node.parents, node.vjp(g)):
                if not p.requires_grad:
                    continue
                if p.id in grads:
                    grads[p.id] = grads[p.id] + pg
                else:
                    grads[p.id] = np.asarray(pg, dtype=np.float64)
    return [np.array(grads[w.id]) if w.id in grads else np.zeros(w.shape) for w in wrt]


def backward(loss: Node, wrt: Sequence[Node]) -> dict[int, np.ndarray]:
    """Like :func:`grad` but keyed by node id."""
    return {w.id: g for w, g in zip(wrt, grad(loss, wrt))}
