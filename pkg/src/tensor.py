"""
Dense float64 tensors with reverse-mode automatic differentiation.

Every op records its parents and a backward closure when any input requires
a gradient. `backward` walks the recorded graph in reverse topological order.
Leaf tensors accumulate gradients across passes (call `zero_grad` between
optimizer steps); intermediate gradients are recomputed on every pass.

Only one broadcast is supported: adding a vector to every row of a matrix.
Every other shape disagreement raises ShapeMismatch.
"""
import threading
from contextlib import contextmanager
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit, softmax as _softmax

from .errors import NonFiniteValue, NotScalar, ShapeMismatch

Backward = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_state = threading.local()


def grad_enabled() -> bool:
    return getattr(_state, "enabled", True)


@contextmanager
def no_grad():
    """Disable graph recording for the current thread."""
    previous = grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = previous


class Tensor:
    __slots__ = ("values", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, values, requires_grad: bool = False, name: Optional[str] = None):
        self.values = np.array(values, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: Tuple['Tensor', ...] = ()
        self._backward: Optional[Backward] = None

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def is_leaf(self) -> bool:
        return not self._parents

    def item(self) -> float:
        return float(self.values)

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64)
        else:
            self.grad += g

    def backward(self) -> None:
        backward(self)

    def __add__(self, other):
        return add(self, _lift(other, self))

    def __radd__(self, other):
        return add(_lift(other, self), self)

    def __sub__(self, other):
        return sub(self, _lift(other, self))

    def __rsub__(self, other):
        return sub(_lift(other, self), self)

    def __mul__(self, other):
        return mul(self, _lift(other, self))

    def __rmul__(self, other):
        return mul(_lift(other, self), self)

    def __neg__(self):
        return mul(self, Tensor(np.full(self.shape, -1.0)))

    def __matmul__(self, other):
        return matmul(self, other)


def _lift(value: Union['Tensor', float], like: Tensor) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.full(like.shape, float(value)))


def _result(values: np.ndarray, parents: Sequence[Tensor], backward_fn: Backward) -> Tensor:
    if not np.all(np.isfinite(values)):
        raise NonFiniteValue("operation produced NaN or Inf")
    out = Tensor.__new__(Tensor)
    out.values = values
    out.grad = None
    out.name = None
    out.requires_grad = grad_enabled() and any(p.requires_grad for p in parents)
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward = backward_fn
    else:
        out._parents = ()
        out._backward = None
    return out


def _topological_order(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """Populate .grad of every tensor that requires grad and feeds `loss`."""
    if loss.shape != ():
        raise NotScalar(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    order = _topological_order(loss)
    for node in order:
        if not node.is_leaf:
            node.grad = None
    loss._accumulate(np.ones(()))
    for node in reversed(order):
        if node.is_leaf or node.grad is None:
            continue
        for parent, g in zip(node._parents, node._backward(node.grad)):
            if g is not None and parent.requires_grad:
                parent._accumulate(g)


# Linear algebra ----------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product; either operand may be a vector (matrix-vector or vector-matrix)."""
    if a.values.ndim not in (1, 2) or b.values.ndim not in (1, 2) or (a.values.ndim == 1 and b.values.ndim == 1):
        raise ShapeMismatch(f"matmul needs a matrix operand, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[0]:
        raise ShapeMismatch(f"matmul inner dimensions differ: {a.shape} x {b.shape}")
    av, bv = a.values, b.values

    def _backward(g):
        if av.ndim == 2 and bv.ndim == 2:
            return g @ bv.T, av.T @ g
        if av.ndim == 2:
            return np.outer(g, bv), av.T @ g
        return bv @ g, np.outer(av, g)

    return _result(av @ bv, (a, b), _backward)


def dot(a: Tensor, b: Tensor) -> Tensor:
    if a.values.ndim != 1 or a.shape != b.shape:
        raise ShapeMismatch(f"dot needs equal-length vectors, got {a.shape} and {b.shape}")
    av, bv = a.values, b.values
    return _result(np.dot(av, bv), (a, b), lambda g: (g * bv, g * av))


def transpose(a: Tensor) -> Tensor:
    if a.values.ndim != 2:
        raise ShapeMismatch(f"transpose needs a matrix, got {a.shape}")
    return _result(a.values.T.copy(), (a,), lambda g: (g.T,))


# Elementwise -------------------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; a vector may be added to every row of a matrix (bias)."""
    if a.shape == b.shape:
        return _result(a.values + b.values, (a, b), lambda g: (g, g))
    if a.values.ndim == 2 and b.values.ndim == 1 and a.shape[1] == b.shape[0]:
        return _result(a.values + b.values, (a, b), lambda g: (g, g.sum(axis=0)))
    if a.values.ndim == 1 and b.values.ndim == 2 and b.shape[1] == a.shape[0]:
        return _result(a.values + b.values, (a, b), lambda g: (g.sum(axis=0), g))
    raise ShapeMismatch(f"cannot add shapes {a.shape} and {b.shape}")


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeMismatch(f"cannot subtract shapes {a.shape} and {b.shape}")
    return _result(a.values - b.values, (a, b), lambda g: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeMismatch(f"cannot multiply shapes {a.shape} and {b.shape}")
    av, bv = a.values, b.values
    return _result(av * bv, (a, b), lambda g: (g * bv, g * av))


def scale(x: Tensor, s: Tensor) -> Tensor:
    """Multiply every element of x by the scalar tensor s."""
    if s.shape != ():
        raise ShapeMismatch(f"scale factor must be a scalar, got {s.shape}")
    xv, sv = x.values, s.values
    return _result(xv * sv, (x, s), lambda g: (g * sv, np.sum(g * xv)))


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.values)
    return _result(y, (x,), lambda g: (g * (1.0 - y * y),))


def sigmoid(x: Tensor) -> Tensor:
    y = expit(x.values)
    return _result(y, (x,), lambda g: (g * y * (1.0 - y),))


def log(x: Tensor) -> Tensor:
    xv = x.values
    with np.errstate(divide='ignore', invalid='ignore'):
        y = np.log(xv)
    return _result(y, (x,), lambda g: (g / xv,))


def softmax(x: Tensor) -> Tensor:
    """Softmax over a vector (max-shifted for stability)."""
    if x.values.ndim != 1 or x.shape[0] < 1:
        raise ShapeMismatch(f"softmax needs a non-empty vector, got {x.shape}")
    y = _softmax(x.values)

    def _backward(g):
        return (y * (g - np.dot(g, y)),)

    return _result(y, (x,), _backward)


def sum_(x: Tensor) -> Tensor:
    shape = x.shape
    return _result(np.sum(x.values), (x,), lambda g: (np.full(shape, g),))


# Structural --------------------------------------------------------------------

def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not parts:
        raise ShapeMismatch("concat needs at least one tensor")
    ndim = parts[0].values.ndim
    for p in parts:
        if p.values.ndim != ndim or any(
                p.shape[d] != parts[0].shape[d] for d in range(ndim) if d != axis):
            raise ShapeMismatch(f"cannot concat shapes {[q.shape for q in parts]} on axis {axis}")
    bounds = np.cumsum([0] + [p.shape[axis] for p in parts])

    def _backward(g):
        return [np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=axis) for i in range(len(parts))]

    return _result(np.concatenate([p.values for p in parts], axis=axis), parts, _backward)


def stack(rows: Sequence[Tensor]) -> Tensor:
    """Stack equal-length vectors into a matrix, one per row."""
    if not rows or any(r.values.ndim != 1 or r.shape != rows[0].shape for r in rows):
        raise ShapeMismatch("stack needs one or more equal-length vectors")
    return _result(np.stack([r.values for r in rows]), rows, lambda g: list(g))


def row(x: Tensor, i: int) -> Tensor:
    if x.values.ndim != 2:
        raise ShapeMismatch(f"row needs a matrix, got {x.shape}")
    shape = x.shape

    def _backward(g):
        full = np.zeros(shape)
        full[i] = g
        return (full,)

    return _result(x.values[i].copy(), (x,), _backward)


def take_rows(table: Tensor, ids: Sequence[int]) -> Tensor:
    """Gather rows of a matrix; gradients scatter back only into the selected rows."""
    idx = np.asarray(ids, dtype=np.int64)
    shape = table.shape

    def _backward(g):
        full = np.zeros(shape)
        np.add.at(full, idx, g)
        return (full,)

    return _result(table.values[idx], (table,), _backward)


def slice_(x: Tensor, start: int, stop: int) -> Tensor:
    if x.values.ndim != 1 or not 0 <= start <= stop <= x.shape[0]:
        raise ShapeMismatch(f"cannot slice [{start}:{stop}] from {x.shape}")
    n = x.shape[0]

    def _backward(g):
        full = np.zeros(n)
        full[start:stop] = g
        return (full,)

    return _result(x.values[start:stop].copy(), (x,), _backward)


def index(x: Tensor, i: int) -> Tensor:
    """Select one element of a vector as a scalar tensor."""
    if x.values.ndim != 1:
        raise ShapeMismatch(f"index needs a vector, got {x.shape}")
    n = x.shape[0]

    def _backward(g):
        full = np.zeros(n)
        full[i] = g
        return (full,)

    return _result(np.array(x.values[i]), (x,), _backward)


def pad(x: Tensor, size: int) -> Tensor:
    """Extend a vector with trailing zeros to `size` elements."""
    if x.values.ndim != 1 or size < x.shape[0]:
        raise ShapeMismatch(f"cannot pad {x.shape} to {size}")
    n = x.shape[0]
    out = np.zeros(size)
    out[:n] = x.values
    return _result(out, (x,), lambda g: (g[:n].copy(),))


def scatter_add(x: Tensor, ids: Sequence[int], size: int) -> Tensor:
    """out[ids[i]] += x[i]; repeated ids aggregate."""
    idx = np.asarray(ids, dtype=np.int64)
    if x.values.ndim != 1 or idx.shape != x.shape:
        raise ShapeMismatch(f"scatter_add needs one id per element, got {x.shape} and {idx.shape}")
    out = np.zeros(size)
    np.add.at(out, idx, x.values)
    return _result(out, (x,), lambda g: (g[idx],))
