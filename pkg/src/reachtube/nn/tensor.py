"""Reverse-mode autodiff on numpy arrays.

A ``Tensor`` wraps an ``np.ndarray`` and records the operation that
produced it.  Calling :meth:`Tensor.backward` on a scalar walks the tape
in reverse topological order and accumulates gradients into ``.grad`` of
every node that participated.  Gradients on leaves persist across
multiple backward calls, which is what lets a training loop accumulate
per-sample gradients into a batch average before an optimizer step.

Only the operations needed by the operator networks are implemented.
Broadcasting in ``add``/``mul`` is supported and the backward pass sums
gradient contributions over broadcast axes.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "Tensor",
    "add",
    "sub",
    "mul",
    "matmul",
    "transpose",
    "reshape",
    "gelu",
    "layernorm",
    "mean",
]


class Tensor:
    """Node in the autodiff graph holding a value and its gradient."""

    __slots__ = ("data", "grad", "parents", "backward_fn", "name")

    def __init__(self, data, parents=(), backward_fn=None, name=None):
        self.data = np.asarray(data)
        self.grad = None
        self.parents = tuple(parents)
        self.backward_fn = backward_fn
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        """Backpropagate from this node, which must hold a single scalar."""
        if self.data.size != 1:
            raise ValueError("backward requires a scalar output, got shape %s" % (self.data.shape,))
        order = []
        seen = set()
        stack = [(self, False)]
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
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node.backward_fn is not None and node.grad is not None:
                node.backward_fn(node.grad)

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}{tag})"


def _accumulate(node: Tensor, grad: np.ndarray) -> None:
    """Add ``grad`` into ``node.grad``, reducing over broadcast axes."""
    shape = node.data.shape
    if grad.shape != shape:
        # sum over leading axes introduced by broadcasting
        extra = grad.ndim - len(shape)
        if extra > 0:
            grad = grad.sum(axis=tuple(range(extra)))
        # sum over axes that were size one in the original
        axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
        if axes:
            grad = grad.sum(axis=axes, keepdims=True)
    if node.grad is None:
        node.grad = grad.astype(node.data.dtype, copy=True)
    else:
        node.grad = node.grad + grad.astype(node.data.dtype, copy=False)


def _as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(np.asarray(value))


def _is_py_scalar(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def add(a, b) -> Tensor:
    # python scalars stay scalars so float32 graphs are not upcast
    if _is_py_scalar(b):
        a = _as_tensor(a)
        out = Tensor(a.data + b, parents=(a,))
        out.backward_fn = lambda grad: _accumulate(a, grad)
        return out
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data + b.data, parents=(a, b))

    def backward(grad):
        _accumulate(a, grad)
        _accumulate(b, grad)

    out.backward_fn = backward
    return out


def sub(a, b) -> Tensor:
    if _is_py_scalar(b):
        return add(a, -b)
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data - b.data, parents=(a, b))

    def backward(grad):
        _accumulate(a, grad)
        _accumulate(b, -grad)

    out.backward_fn = backward
    return out


def mul(a, b) -> Tensor:
    if _is_py_scalar(b):
        a = _as_tensor(a)
        out = Tensor(a.data * b, parents=(a,))
        out.backward_fn = lambda grad: _accumulate(a, grad * b)
        return out
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data * b.data, parents=(a, b))

    def backward(grad):
        _accumulate(a, grad * b.data)
        _accumulate(b, grad * a.data)

    out.backward_fn = backward
    return out


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError("matmul expects 2-d operands")
    out = Tensor(a.data @ b.data, parents=(a, b))

    def backward(grad):
        _accumulate(a, grad @ b.data.T)
        _accumulate(b, a.data.T @ grad)

    out.backward_fn = backward
    return out


def transpose(a) -> Tensor:
    a = _as_tensor(a)
    if a.data.ndim != 2:
        raise ValueError("transpose expects a 2-d operand")
    out = Tensor(a.data.T.copy(), parents=(a,))

    def backward(grad):
        _accumulate(a, grad.T)

    out.backward_fn = backward
    return out


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    shape = tuple(shape)
    out = Tensor(a.data.reshape(shape), parents=(a,))

    def backward(grad):
        _accumulate(a, grad.reshape(a.data.shape))

    out.backward_fn = backward
    return out


_GELU_C = math.sqrt(2.0 / math.pi)


def gelu(a) -> Tensor:
    """Gaussian error linear unit, tanh approximation."""
    a = _as_tensor(a)
    x = a.data
    inner = _GELU_C * (x + 0.044715 * x**3)
    t = np.tanh(inner)
    out = Tensor(0.5 * x * (1.0 + t), parents=(a,))

    def backward(grad):
        sech2 = 1.0 - t * t
        d_inner = _GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
        _accumulate(a, grad * (0.5 * (1.0 + t) + 0.5 * x * sech2 * d_inner))

    out.backward_fn = backward
    return out


def layernorm(a, gain, bias, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean, unit variance, then scale and shift."""
    a, gain, bias = _as_tensor(a), _as_tensor(gain), _as_tensor(bias)
    x = a.data
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = Tensor(gain.data * xhat + bias.data, parents=(a, gain, bias))

    def backward(grad):
        axes = tuple(range(grad.ndim - 1))
        _accumulate(bias, grad.sum(axis=axes))
        _accumulate(gain, (grad * xhat).sum(axis=axes))
        gx_hat = grad * gain.data
        m1 = gx_hat.mean(axis=-1, keepdims=True)
        m2 = (gx_hat * xhat).mean(axis=-1, keepdims=True)
        _accumulate(a, inv * (gx_hat - m1 - xhat * m2))

    out.backward_fn = backward
    return out


def mean(a) -> Tensor:
    """Mean over all elements, returning a scalar tensor."""
    a = _as_tensor(a)
    out = Tensor(np.asarray(a.data.mean()), parents=(a,))

    def backward(grad):
        _accumulate(a, np.full_like(a.data, float(grad) / a.data.size))

    out.backward_fn = backward
    return out
