"""Dense float64 tensors with a dynamic reverse-mode tape.

A :class:`Tape` records every primitive applied to tensors that descend
from one of its parameters. Nodes are appended in execution order, so the
node list is already topologically sorted and :func:`backward` only has to
walk it once in reverse. Tensors without a tape are constants: operations on
constants alone are evaluated eagerly and never recorded.

A fresh tape is built for every forward pass during training; a tape is
never mutated by :func:`backward`, so it may be differentiated repeatedly.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..errors import ContractError

VJP = Callable[[np.ndarray], Sequence["np.ndarray | None"]]


class Node:
    __slots__ = ("op", "inputs", "vjp", "name")

    def __init__(self, op: str, inputs: tuple, vjp: VJP | None, name: str | None = None):
        self.op = op
        self.inputs = inputs
        self.vjp = vjp
        self.name = name


class Tape:
    """Topologically ordered record of primitive operations."""

    def __init__(self):
        self.nodes: list[Node] = []
        self.params: dict[str, int] = {}
        self.param_shapes: dict[str, tuple] = {}

    def param(self, name: str, value) -> "Tensor":
        if name in self.params:
            raise ContractError(f"parameter {name!r} already registered on this tape")
        t = Tensor(value)
        t.tape = self
        t.node = len(self.nodes)
        self.nodes.append(Node("param", (), None, name))
        self.params[name] = t.node
        self.param_shapes[name] = t.shape
        return t

    def record(self, op: str, data: np.ndarray, inputs: tuple, vjp: VJP) -> "Tensor":
        t = Tensor.__new__(Tensor)
        t.data = data
        t.tape = self
        t.node = len(self.nodes)
        self.nodes.append(Node(op, inputs, vjp))
        return t

    def __len__(self) -> int:
        return len(self.nodes)


class Tensor:
    __slots__ = ("data", "tape", "node")
    __array_ufunc__ = None

    def __init__(self, data):
        arr = np.asarray(data)
        # extended precision is kept for finite-difference evaluation only
        self.data = np.array(arr, dtype=np.longdouble if arr.dtype == np.longdouble else np.float64)
        self.tape: Tape | None = None
        self.node: int | None = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        tag = "const" if self.tape is None else f"node={self.node}"
        return f"Tensor(shape={self.shape}, {tag})"

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

    def __truediv__(self, other):
        return mul(self, reciprocal(other)) if isinstance(other, Tensor) else mul(self, 1.0 / np.asarray(other, dtype=np.float64))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, key):
        return take(self, key)

    def tanh(self):
        return tanh(self)

    def sigmoid(self):
        return sigmoid(self)

    def exp(self):
        return exp(self)

    def log(self):
        return log(self)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _tape_of(*xs) -> Tape | None:
    for x in xs:
        if x.tape is not None:
            return x.tape
    return None


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _emit(op: str, data: np.ndarray, inputs: tuple, vjp: VJP) -> Tensor:
    tape = _tape_of(*inputs)
    if tape is None:
        t = Tensor.__new__(Tensor)
        t.data = data
        t.tape = None
        t.node = None
        return t
    return tape.record(op, data, inputs, vjp)


# ---------------------------------------------------------------- primitives


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return _emit("add", a.data + b.data, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return _emit("sub", a.data - b.data, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    return _emit("mul", ad * bd, (a, b), lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)))


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _emit("neg", -a.data, (a,), lambda g: (-g,))


def reciprocal(a) -> Tensor:
    a = as_tensor(a)
    out = 1.0 / a.data
    return _emit("reciprocal", out, (a,), lambda g: (-g * out * out,))


def matmul(a, b) -> Tensor:
    """Matrix product for 2-D operands, or a 1-D vector times a matrix."""
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    if bd.ndim != 2 or ad.ndim not in (1, 2):
        raise ContractError(f"matmul supports (n,k)@(k,m) or (k,)@(k,m); got {ad.shape} @ {bd.shape}")

    def vjp(g):
        if ad.ndim == 1:
            return g @ bd.T, np.outer(ad, g)
        return g @ bd.T, ad.T @ g

    return _emit("matmul", ad @ bd, (a, b), vjp)


def concat(xs: Sequence, axis: int = -1) -> Tensor:
    xs = tuple(as_tensor(x) for x in xs)
    sizes = [x.shape[axis] for x in xs]
    cuts = np.cumsum(sizes)[:-1]
    data = np.concatenate([x.data for x in xs], axis=axis)
    return _emit("concat", data, xs, lambda g: tuple(np.split(g, cuts, axis=axis)))


def take(a, key) -> Tensor:
    """Basic (slice/integer) indexing."""
    a = as_tensor(a)
    shape = a.shape

    def vjp(g):
        full = np.zeros(shape)
        full[key] = g
        return (full,)

    return _emit("slice", a.data[key], (a,), vjp)


def reshape(a, shape: tuple) -> Tensor:
    a = as_tensor(a)
    old = a.shape
    return _emit("reshape", a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)
    return _emit("tanh", out, (a,), lambda g: (g * (1.0 - out * out),))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # exp(-|x|) never overflows
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    out = _sigmoid(a.data)
    return _emit("sigmoid", out, (a,), lambda g: (g * out * (1.0 - out),))


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)
    return _emit("exp", out, (a,), lambda g: (g * out,))


def log(a) -> Tensor:
    a = as_tensor(a)
    x = a.data
    return _emit("log", np.log(x), (a,), lambda g: (g / x,))


def clip_min(a, floor: float) -> Tensor:
    """``max(a, floor)`` elementwise; no gradient flows through clipped entries."""
    a = as_tensor(a)
    keep = a.data >= floor
    return _emit("clip_min", np.where(keep, a.data, floor), (a,), lambda g: (g * keep,))


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    shape = a.shape

    def vjp(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return _emit("sum", np.sum(a.data, axis=axis, keepdims=keepdims), (a,), vjp)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    n = a.size if axis is None else a.shape[axis]
    return tsum(a, axis, keepdims) * (1.0 / n)


def logsumexp(a, axis: int = -1, keepdims: bool = False) -> Tensor:
    """Stable ``log(sum(exp(a)))`` along ``axis``."""
    a = as_tensor(a)
    x = a.data
    m = np.max(x, axis=axis, keepdims=True)
    e = np.exp(x - m)
    s = e.sum(axis=axis, keepdims=True)
    out = m + np.log(s)
    soft = e / s
    if not keepdims:
        out = np.squeeze(out, axis=axis)

    def vjp(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (g * soft,)

    return _emit("logsumexp", out, (a,), vjp)


def log_softmax(a, axis: int = -1) -> Tensor:
    return sub(a, logsumexp(a, axis=axis, keepdims=True))


# ------------------------------------------------------------------ backward


def backward(tape: Tape, output: Tensor) -> dict[str, np.ndarray]:
    """Gradients of a scalar ``output`` with respect to every tape parameter.

    Parameters the output does not depend on receive zero gradients.
    """
    if output.data.size != 1:
        raise ContractError(f"backward needs a scalar output, got shape {output.shape}")
    if output.tape is not tape:
        raise ContractError("output was not recorded on this tape")
    nodes = tape.nodes
    adj: list[np.ndarray | None] = [None] * len(nodes)
    adj[output.node] = np.ones_like(output.data)
    grads: dict[str, np.ndarray] = {}
    for i in range(output.node, -1, -1):
        g = adj[i]
        node = nodes[i]
        if node.op == "param":
            if g is not None:
                grads[node.name] = g
            continue
        if g is None:
            continue
        for inp, gi in zip(node.inputs, node.vjp(g)):
            j = inp.node
            if j is None or inp.tape is not tape or gi is None:
                continue
            prev = adj[j]
            adj[j] = gi if prev is None else prev + gi
    return {
        name: grads[name].reshape(shape) if name in grads else np.zeros(shape)
        for name, shape in tape.param_shapes.items()
    }
