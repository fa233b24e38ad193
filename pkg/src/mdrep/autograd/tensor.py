"""Reverse-mode automatic differentiation on dense float arrays.

Tensors wrap NumPy arrays (float32 for training, float64 for checking) and
record a vector-Jacobian closure per operation. ``backward`` walks the graph
in reverse topological order and accumulates gradients additively, so reused
subexpressions get the sum of their path contributions.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

_FLOAT_DTYPES = (np.float32, np.float64)

# every op output is checked for NaN/Inf unless disabled for profiling
_finite_checks = True


def set_finite_checks(enabled: bool) -> bool:
    global _finite_checks
    previous = _finite_checks
    _finite_checks = bool(enabled)
    return previous


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in _FLOAT_DTYPES:
            arr = arr.astype(np.float64)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._vjp: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None

    # -- construction -----------------------------------------------------

    @staticmethod
    def from_op(data, parents, vjp) -> "Tensor":
        if _finite_checks and not np.all(np.isfinite(data)):
            raise FloatingPointError("operation produced non-finite values")
        out = Tensor(data)
        out.requires_grad = any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = tuple(parents)
            out._vjp = vjp
        return out

    # -- basic properties --------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, grad={self.requires_grad})"

    # -- elementwise arithmetic (same-shape only; no broadcasting) ----------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])

    def sum(self):
        return tensor_sum(self)


def _as_tensor(x, like: Tensor) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.full_like(like.data, x))


def add(a: Tensor, b) -> Tensor:
    b = _as_tensor(b, a)
    if a.data.shape != b.data.shape:
        raise ValueError(f"shape mismatch in add: {a.data.shape} vs {b.data.shape}")
    return Tensor.from_op(a.data + b.data, (a, b), lambda g: (g, g))


def mul(a: Tensor, b) -> Tensor:
    b = _as_tensor(b, a)
    if a.data.shape != b.data.shape:
        raise ValueError(f"shape mismatch in mul: {a.data.shape} vs {b.data.shape}")
    return Tensor.from_op(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data))


def reshape(t: Tensor, shape) -> Tensor:
    old = t.data.shape
    return Tensor.from_op(t.data.reshape(shape), (t,), lambda g: (g.reshape(old),))


def tensor_sum(t: Tensor) -> Tensor:
    return Tensor.from_op(
        np.asarray(t.data.sum()), (t,), lambda g: (np.full_like(t.data, g),)
    )


def concat(tensors: Sequence[Tensor], axis: int = 1) -> Tensor:
    if not tensors:
        raise ValueError("concat requires at least one tensor")
    datas = [t.data for t in tensors]
    sizes = [d.shape[axis] for d in datas]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    return Tensor.from_op(np.concatenate(datas, axis=axis), tuple(tensors), vjp)


def take_column(t: Tensor, j: int) -> Tensor:
    """Select column j of a 2-D tensor (used for class-score gradients)."""
    if t.data.ndim != 2:
        raise ValueError("take_column expects a 2-D tensor")
    if not 0 <= j < t.data.shape[1]:
        raise ValueError(f"column {j} out of range for shape {t.data.shape}")

    def vjp(g):
        full = np.zeros_like(t.data)
        full[:, j] = g
        return (full,)

    return Tensor.from_op(t.data[:, j].copy(), (t,), vjp)


def backward(loss: Tensor) -> None:
    """Populate ``grad`` on every reachable tensor with requires_grad set."""
    if loss.data.size != 1:
        raise ValueError("backward requires a scalar loss")
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            stack.append((parent, False))

    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._vjp is None or node.grad is None:
            continue
        grads = node._vjp(node.grad)
        for parent, g in zip(node._parents, grads):
            if g is None or not parent.requires_grad:
                continue
            if parent.grad is None:
                parent.grad = np.asarray(g, dtype=parent.data.dtype)
            else:
                parent.grad = parent.grad + g


def zero_grads(params) -> None:
    """Clear gradients on a dict or iterable of tensors."""
    values = params.values() if hasattr(params, "values") else params
    for p in values:
        p.grad = None
