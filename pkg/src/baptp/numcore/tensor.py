"""Dense tensors with tape-based reverse-mode differentiation.

Operations only record onto a :class:`Graph` while one is active (``with
Graph() as g:``) and at least one input requires a gradient. Outside a graph
every op is a plain numpy evaluation, which is what inference uses.

Every kernel checks its output for NaN/Inf and raises :class:`NonFiniteError`
instead of letting a bad value travel through the network.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Tensor", "Graph", "Node", "NonFiniteError", "ShapeError",
    "as_tensor", "backward",
    "add", "sub", "mul", "scale", "neg", "matmul", "linear",
    "tanh", "sigmoid", "maximum", "concat", "stack", "take", "where",
    "dropout", "softmax", "sum", "mean", "square", "sqrt", "reshape",
]


class NonFiniteError(FloatingPointError):
    """A kernel produced NaN or Inf."""


class ShapeError(ValueError):
    """Operand shapes are incompatible for the requested op."""


class Tensor:
    """An immutable n-d array plus the flag saying whether it needs a gradient."""

    __slots__ = ("data", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None, dtype=None):
        arr = np.array(data, dtype=dtype, copy=True)
        if arr.dtype.kind != "f":
            arr = arr.astype(np.float64)
        arr.flags.writeable = False
        self.data = arr
        self.requires_grad = requires_grad
        self.name = name

    @classmethod
    def _wrap(cls, arr: np.ndarray, requires_grad: bool) -> "Tensor":
        t = cls.__new__(cls)
        arr = np.asarray(arr)
        arr.flags.writeable = False
        t.data = arr
        t.requires_grad = requires_grad
        t.name = None
        return t

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{tag}, requires_grad={self.requires_grad})"

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
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


@dataclass
class Node:
    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward: Callable[[np.ndarray], Sequence[np.ndarray | None]]


@dataclass
class Graph:
    """Ordered record of differentiable ops.

    Nodes are appended as they execute, so an op's inputs were always produced
    by earlier nodes (or are leaves) and the list is a topological order.
    """

    nodes: list[Node] = field(default_factory=list)

    def __enter__(self) -> "Graph":
        _ACTIVE.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _ACTIVE.remove(self)

    def __len__(self) -> int:
        return len(self.nodes)

    def backward(self, loss: Tensor, wrt: dict[str, Tensor]) -> dict[str, np.ndarray]:
        return backward(self, loss, wrt)


_ACTIVE: list[Graph] = []


def _check_finite(op: str, arr: np.ndarray) -> None:
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"{op} produced non-finite values")


def _emit(op: str, data: np.ndarray, inputs: tuple[Tensor, ...], grad_fn) -> Tensor:
    _check_finite(op, data)
    requires = any(t.requires_grad for t in inputs)
    out = Tensor._wrap(data, requires)
    if requires and _ACTIVE:
        _ACTIVE[-1].nodes.append(Node(op, inputs, out, grad_fn))
    return out


def as_tensor(x, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x, dtype=dtype)


def _pair(a, b) -> tuple[Tensor, Tensor]:
    if isinstance(a, Tensor) and not isinstance(b, Tensor):
        b = Tensor(b, dtype=a.dtype)
    elif isinstance(b, Tensor) and not isinstance(a, Tensor):
        a = Tensor(a, dtype=b.dtype)
    return as_tensor(a), as_tensor(b)


def _broadcast_shape(op: str, sa: tuple, sb: tuple) -> tuple:
    try:
        return np.broadcast_shapes(sa, sb)
    except ValueError:
        raise ShapeError(f"{op}: cannot broadcast shapes {sa} and {sb}") from None


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# ---------------------------------------------------------------- elementwise

def add(a, b) -> Tensor:
    a, b = _pair(a, b)
    _broadcast_shape("add", a.shape, b.shape)
    sa, sb = a.shape, b.shape
    return _emit("add", a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)
    _broadcast_shape("sub", a.shape, b.shape)
    sa, sb = a.shape, b.shape
    return _emit("sub", a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)
    _broadcast_shape("mul", a.shape, b.shape)
    ad, bd = a.data, b.data
    return _emit("mul", ad * bd, (a, b),
                 lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)))


def scale(a: Tensor, c: float) -> Tensor:
    return _emit("scale", a.data * c, (a,), lambda g: (g * c,))


def neg(a: Tensor) -> Tensor:
    return _emit("neg", -a.data, (a,), lambda g: (-g,))


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    return _emit("tanh", y, (a,), lambda g: (g * (1.0 - y * y),))


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    # split by sign so exp never overflows
    e = np.exp(-np.abs(x))
    y = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(x.dtype, copy=False)
    return _emit("sigmoid", y, (a,), lambda g: (g * y * (1.0 - y),))


def maximum(a, b) -> Tensor:
    """Elementwise max; on ties the gradient goes to the first operand."""
    a, b = _pair(a, b)
    _broadcast_shape("maximum", a.shape, b.shape)
    first = a.data >= b.data
    sa, sb = a.shape, b.shape
    return _emit("maximum", np.maximum(a.data, b.data), (a, b),
                 lambda g: (_unbroadcast(np.where(first, g, 0.0), sa),
                            _unbroadcast(np.where(first, 0.0, g), sb)))


def where(cond, a, b) -> Tensor:
    """Select ``a`` where ``cond`` holds, else ``b``. ``cond`` is a constant."""
    a, b = _pair(a, b)
    cond = np.asarray(cond, dtype=bool)
    _broadcast_shape("where", np.broadcast_shapes(cond.shape, a.shape), b.shape)
    sa, sb = a.shape, b.shape
    return _emit("where", np.where(cond, a.data, b.data), (a, b),
                 lambda g: (_unbroadcast(np.where(cond, g, 0.0), sa),
                            _unbroadcast(np.where(cond, 0.0, g), sb)))


def square(a: Tensor) -> Tensor:
    x = a.data
    return _emit("square", x * x, (a,), lambda g: (2.0 * g * x,))


def sqrt(a: Tensor) -> Tensor:
    """Square root; the subgradient at 0 is taken as 0."""
    if (a.data < 0).any():
        raise NonFiniteError("sqrt of a negative value")
    y = np.sqrt(a.data)

    def grad(g):
        safe = np.where(y > 0, y, 1.0)
        return (np.where(y > 0, g / (2.0 * safe), 0.0),)

    return _emit("sqrt", y, (a,), grad)


def dropout(a: Tensor, p: float, training: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout. Returns ``a`` itself when not training."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {p}")
    if not training or p == 0.0:
        return a
    if rng is None:
        raise ValueError("training-mode dropout needs the toolkit rng")
    keep = (rng.random(a.shape) >= p) / (1.0 - p)
    keep = keep.astype(a.dtype)
    return _emit("dropout", a.data * keep, (a,), lambda g: (g * keep,))


# ---------------------------------------------------------------- linear algebra

def matmul(a, b) -> Tensor:
    """``a[..., k] @ b[k, c]``; leading dims of ``a`` are treated as a batch."""
    a, b = _pair(a, b)
    if b.ndim != 2 or a.ndim < 1 or a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul: shapes {a.shape} and {b.shape} are not aligned")
    ad, bd = a.data, b.data

    def grad(g):
        ga = g @ bd.T
        gb = ad.reshape(-1, ad.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        return ga, gb

    return _emit("matmul", ad @ bd, (a, b), grad)


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """``x @ w.T + b`` with ``w`` stored as [out, in]."""
    if w.ndim != 2 or x.shape[-1] != w.shape[1]:
        raise ShapeError(f"linear: input {x.shape} does not fit weight {w.shape}")
    if b is not None and b.shape != (w.shape[0],):
        raise ShapeError(f"linear: bias {b.shape} does not fit weight {w.shape}")
    xd, wd = x.data, w.data
    out = xd @ wd.T
    if b is not None:
        out = out + b.data

    def grad(g):
        g2 = g.reshape(-1, g.shape[-1])
        gx = g @ wd
        gw = g2.T @ xd.reshape(-1, xd.shape[-1])
        if b is None:
            return gx, gw
        return gx, gw, g2.sum(axis=0)

    inputs = (x, w) if b is None else (x, w, b)
    return _emit("linear", out, inputs, grad)


# ---------------------------------------------------------------- structure

def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    src = a.shape
    return _emit("reshape", a.data.reshape(shape), (a,), lambda g: (g.reshape(src),))


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    if not tensors:
        raise ShapeError("concat: no operands")
    tensors = tuple(tensors)
    ax = axis % tensors[0].ndim
    try:
        data = np.concatenate([t.data for t in tensors], axis=ax)
    except ValueError:
        raise ShapeError(f"concat: incompatible shapes {[t.shape for t in tensors]}") from None
    splits = np.cumsum([t.shape[ax] for t in tensors])[:-1]
    return _emit("concat", data, tensors, lambda g: tuple(np.split(g, splits, axis=ax)))


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = tuple(tensors)
    if not tensors:
        raise ShapeError("stack: no operands")
    if len({t.shape for t in tensors}) != 1:
        raise ShapeError(f"stack: shapes differ {[t.shape for t in tensors]}")
    data = np.stack([t.data for t in tensors], axis=axis)
    ax = axis % data.ndim
    n = len(tensors)
    return _emit("stack", data, tensors,
                 lambda g: tuple(np.take(g, i, axis=ax) for i in range(n)))


def take(a: Tensor, index: int, axis: int = 0) -> Tensor:
    """Select one position along ``axis`` (the axis is dropped)."""
    ax = axis % a.ndim
    src = a.shape

    def grad(g):
        full = np.zeros(src, dtype=g.dtype)
        sl = [slice(None)] * len(src)
        sl[ax] = index
        full[tuple(sl)] = g
        return (full,)

    return _emit("take", np.take(a.data, index, axis=ax), (a,), grad)


def sum(a: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    src = a.shape

    def grad(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, src).copy(),)

    return _emit("sum", np.asarray(a.data.sum(axis=axis, keepdims=keepdims)), (a,), grad)


def mean(a: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    n = a.data.size if axis is None else a.shape[axis]
    return scale(sum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def _ordered_sum(x: np.ndarray, axis: int) -> np.ndarray:
    # left-to-right accumulation; appending zeros cannot change the result
    parts = np.moveaxis(x, axis, 0)
    acc = parts[0].copy()
    for k in range(1, parts.shape[0]):
        acc = acc + parts[k]
    return np.expand_dims(acc, axis)


def softmax(a: Tensor, axis: int = -1, mask=None) -> Tensor:
    """Softmax along ``axis``; masked-out entries get weight exactly 0.

    A slice with every entry masked yields all zeros.
    """
    x = a.data
    ax = axis % x.ndim
    if mask is None:
        keep = np.ones(x.shape, dtype=bool)
    else:
        keep = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
    shifted = np.where(keep, x, -np.inf)
    top = shifted.max(axis=ax, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    e = np.where(keep, np.exp(shifted - top), 0.0)
    denom = _ordered_sum(e, ax)
    y = np.where(denom > 0, e / np.where(denom > 0, denom, 1.0), 0.0).astype(x.dtype, copy=False)

    def grad(g):
        return (y * (g - (g * y).sum(axis=ax, keepdims=True)),)

    return _emit("softmax", y, (a,), grad)


# ---------------------------------------------------------------- backprop

def backward(graph: Graph, loss: Tensor, wrt: dict[str, Tensor]) -> dict[str, np.ndarray]:
    """Gradients of a scalar ``loss`` with respect to every tensor in ``wrt``.

    Tensors that do not influence the loss get a zero gradient.
    """
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(graph.nodes):
        g = grads.pop(id(node.output), None)
        if g is None:
            continue
        for t, gi in zip(node.inputs, node.backward(g)):
            if gi is None or not t.requires_grad:
                continue
            key = id(t)
            grads[key] = grads[key] + gi if key in grads else gi
    out = {}
    for name, t in wrt.items():
        g = grads.get(id(t))
        out[name] = np.zeros_like(t.data) if g is None else np.asarray(g, dtype=t.dtype).reshape(t.shape)
    return out
