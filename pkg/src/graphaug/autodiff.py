"""Minimal reverse-mode differentiation over 2-D float64 matrices.

A :class:`Tape` records every primitive applied to a watched tensor, together
with a closure that maps the output adjoint to input adjoints.  Calling
:meth:`Tape.backward` replays those closures in reverse recording order, which
is a valid reverse topological order because a node can only be recorded after
its inputs exist.

Operations on plain arrays (or on tensors that do not depend on any watched
leaf) are evaluated eagerly and never recorded, so the same forward code serves
training (with a tape) and inference (without one).

Left operands of :func:`matmul` may be ``scipy.sparse`` matrices; these are
always treated as constants.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ContractError, ShapeError

BackwardFn = Callable[[np.ndarray], Sequence["np.ndarray | None"]]


class Tensor:
    """A dense float64 value with an optional place on a tape."""

    __slots__ = ("value", "grad", "tape", "requires_grad", "name", "_parents", "_backward")

    __array_priority__ = 100  # so ndarray <op> Tensor defers to Tensor

    def __init__(self, value, tape=None, requires_grad=False, parents=(), backward=None, name=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.tape = tape
        self.requires_grad = requires_grad
        self.name = name
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        if np.isscalar(other):
            return scale(self, float(other))
        return mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    @property
    def T(self):
        return transpose(self)


class Tape:
    """Ordered record of differentiable primitives."""

    def __init__(self):
        self.nodes: list[Tensor] = []
        self.leaves: list[Tensor] = []

    def watch(self, value, name=None) -> Tensor:
        """Register ``value`` as a trainable leaf and return its tensor."""
        t = Tensor(np.array(value, dtype=np.float64), tape=self, requires_grad=True, name=name)
        self.leaves.append(t)
        return t

    def record(self, value, parents, backward: BackwardFn) -> Tensor:
        t = Tensor(value, tape=self, requires_grad=True, parents=tuple(parents), backward=backward)
        self.nodes.append(t)
        return t

    def backward(self, loss: Tensor) -> list[np.ndarray]:
        """Accumulate d(loss)/d(leaf) into every watched leaf.

        Returns the leaf gradients in watch order.  Leaves the loss does not
        depend on receive zeros.
        """
        if not isinstance(loss, Tensor) or loss.value.size != 1:
            raise ContractError("backward() needs a scalar loss tensor")
        for node in self.nodes:
            node.grad = None
        for leaf in self.leaves:
            leaf.grad = np.zeros_like(leaf.value)
        if not loss.requires_grad:
            return [leaf.grad for leaf in self.leaves]
        if loss.tape is not self:
            raise ContractError("loss was not produced on this tape")
        loss.grad = np.ones_like(loss.value)
        for node in reversed(self.nodes):
            if node.grad is None:
                continue
            grads = node._backward(node.grad)
            for parent, g in zip(node._parents, grads):
                if g is None or not parent.requires_grad:
                    continue
                if parent.grad is None:
                    parent.grad = np.array(g, dtype=np.float64)
                else:
                    parent.grad = parent.grad + g
        return [leaf.grad for leaf in self.leaves]


def _as_tensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def _tape_of(*tensors: Tensor):
    tape = None
    for t in tensors:
        if t.requires_grad:
            if tape is None:
                tape = t.tape
            elif t.tape is not tape:
                raise ContractError("operands belong to different tapes")
    return tape


def _result(value, parents, backward):
    tape = _tape_of(*parents)
    if tape is None:
        return Tensor(value)
    return tape.record(value, parents, backward)


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# primitives


def matmul(a, b) -> Tensor:
    """Matrix product ``a @ b``; ``a`` may be a scipy sparse constant."""
    if sp.issparse(a):
        b = _as_tensor(b)
        if a.shape[1] != b.shape[0]:
            raise ShapeError(f"matmul: {a.shape} x {b.shape}")
        value = np.asarray(a @ b.value)
        a_t = a.T.tocsr()
        return _result(value, (b,), lambda g: (np.asarray(a_t @ g),))
    a, b = _as_tensor(a), _as_tensor(b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: {a.shape} x {b.shape}")
    av, bv = a.value, b.value
    return _result(av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g))


def transpose(a) -> Tensor:
    a = _as_tensor(a)
    return _result(a.value.T.copy(), (a,), lambda g: (g.T,))


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    sa, sb = a.shape, b.shape
    try:
        value = a.value + b.value
    except ValueError as exc:
        raise ShapeError(f"add: {sa} + {sb}") from exc
    return _result(value, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    sa, sb = a.shape, b.shape
    try:
        value = a.value - b.value
    except ValueError as exc:
        raise ShapeError(f"sub: {sa} - {sb}") from exc
    return _result(value, (a, b), lambda g: (_unbroadcast(g, sa), -_unbroadcast(g, sb)))


def mul(a, b) -> Tensor:
    """Elementwise product with numpy broadcasting."""
    a, b = _as_tensor(a), _as_tensor(b)
    av, bv = a.value, b.value
    try:
        value = av * bv
    except ValueError as exc:
        raise ShapeError(f"mul: {a.shape} * {b.shape}") from exc
    return _result(
        value,
        (a, b),
        lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)),
    )


def scale(a, c: float) -> Tensor:
    a = _as_tensor(a)
    return _result(a.value * c, (a,), lambda g: (g * c,))


def relu(a) -> Tensor:
    a = _as_tensor(a)
    mask = a.value > 0
    return _result(np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))


def tanh(a) -> Tensor:
    a = _as_tensor(a)
    y = np.tanh(a.value)
    return _result(y, (a,), lambda g: (g * (1.0 - y * y),))


def softmax_rows(a) -> Tensor:
    """Row-wise softmax with max subtraction."""
    a = _as_tensor(a)
    shifted = a.value - a.value.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=1, keepdims=True)

    def back(g):
        return (y * (g - (g * y).sum(axis=1, keepdims=True)),)

    return _result(y, (a,), back)


def dropout(a, p: float, rng: np.random.Generator | None, training: bool = True) -> Tensor:
    """Inverted dropout: zero with probability ``p``, scale survivors by 1/(1-p)."""
    if not 0.0 <= p < 1.0:
        raise ContractError(f"dropout rate must be in [0, 1), got {p}")
    a = _as_tensor(a)
    if not training or p == 0.0:
        return a
    if rng is None:
        raise ContractError("dropout in training mode needs an rng")
    keep = (rng.random(a.shape) >= p) / (1.0 - p)
    return _result(a.value * keep, (a,), lambda g: (g * keep,))


def sum(a) -> Tensor:  # noqa: A001 - mirrors numpy naming
    a = _as_tensor(a)
    shape = a.shape
    return _result(np.array(a.value.sum()), (a,), lambda g: (np.full(shape, float(g)),))


def sumsq(a) -> Tensor:
    """Squared Frobenius norm."""
    a = _as_tensor(a)
    av = a.value
    return _result(np.array(np.sum(av * av)), (a,), lambda g: (2.0 * float(g) * av,))


def center_rows(a) -> Tensor:
    """Subtract the column means, i.e. left-multiply by the centering matrix."""
    a = _as_tensor(a)
    return _result(
        a.value - a.value.mean(axis=0, keepdims=True),
        (a,),
        lambda g: (g - g.mean(axis=0, keepdims=True),),
    )


def column(a, j: int) -> Tensor:
    a = _as_tensor(a)
    shape = a.shape

    def back(g):
        out = np.zeros(shape)
        out[:, j : j + 1] = g
        return (out,)

    return _result(a.value[:, j : j + 1].copy(), (a,), back)


def hstack(parts: Sequence) -> Tensor:
    parts = [_as_tensor(p) for p in parts]
    widths = np.cumsum([0] + [p.shape[1] for p in parts])

    def back(g):
        return tuple(g[:, widths[i] : widths[i + 1]] for i in range(len(parts)))

    return _result(np.hstack([p.value for p in parts]), tuple(parts), back)


def nll(probs, rows: np.ndarray, cols: np.ndarray, eps: float = 1e-12) -> Tensor:
    """``-sum(log(max(probs[rows, cols], eps)))``."""
    probs = _as_tensor(probs)
    picked = probs.value[rows, cols]
    clamped = np.maximum(picked, eps)
    shape = probs.shape

    def back(g):
        out = np.zeros(shape)
        # clamped entries have zero derivative
        np.add.at(out, (rows, cols), np.where(picked > eps, -float(g) / clamped, 0.0))
        return (out,)

    return _result(np.array(-np.log(clamped).sum()), (probs,), back)


def elementwise(op: str, m, p: float = 0.0, rng=None, training: bool = True) -> Tensor:
    """Dispatch one of ``relu``, ``tanh``, ``softmax_rows`` or ``dropout`` by name."""
    if op == "relu":
        return relu(m)
    if op == "tanh":
        return tanh(m)
    if op == "softmax_rows":
        return softmax_rows(m)
    if op == "dropout":
        return dropout(m, p, rng, training)
    raise ContractError(f"unknown elementwise op {op!r}")


def value_of(x) -> np.ndarray:
    return x.value if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
