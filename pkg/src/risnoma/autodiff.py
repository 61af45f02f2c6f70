"""Minimal reverse-mode automatic differentiation on numpy arrays.

Just enough machinery for small actor-critic networks: dense layers, tanh,
exponentials, log-softmax, elementwise min/max, reductions, and row gathering.
Graphs are built per call and discarded after backward().
"""

from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcast gradient back to the original operand shape."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "parents", "backward_fn")

    def __init__(self, data, parents=(), backward_fn=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.parents = parents
        self.backward_fn = backward_fn

    @property
    def shape(self):
        return self.data.shape

    def _accumulate(self, grad):
        grad = _unbroadcast(np.asarray(grad, dtype=np.float64), self.data.shape)
        self.grad = grad if self.grad is None else self.grad + grad

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar output")
        topo, seen, stack = [], set(), [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node.parents:
                stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node.backward_fn is not None and node.grad is not None:
                node.backward_fn(node.grad)

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data + b.data, (a, b))

    def backward(grad):
        a._accumulate(grad)
        b._accumulate(grad)

    out.backward_fn = backward
    return out


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data * b.data, (a, b))

    def backward(grad):
        a._accumulate(grad * b.data)
        b._accumulate(grad * a.data)

    out.backward_fn = backward
    return out


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data / b.data, (a, b))

    def backward(grad):
        a._accumulate(grad / b.data)
        b._accumulate(-grad * a.data / (b.data ** 2))

    out.backward_fn = backward
    return out


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data @ b.data, (a, b))

    def backward(grad):
        a._accumulate(grad @ b.data.T)
        b._accumulate(a.data.T @ grad)

    out.backward_fn = backward
    return out


def tanh(a) -> Tensor:
    a = as_tensor(a)
    value = np.tanh(a.data)
    out = Tensor(value, (a,))

    def backward(grad):
        a._accumulate(grad * (1.0 - value ** 2))

    out.backward_fn = backward
    return out


def exp(a) -> Tensor:
    a = as_tensor(a)
    value = np.exp(a.data)
    out = Tensor(value, (a,))

    def backward(grad):
        a._accumulate(grad * value)

    out.backward_fn = backward
    return out


def log(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.log(a.data), (a,))

    def backward(grad):
        a._accumulate(grad / a.data)

    out.backward_fn = backward
    return out


def square(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data ** 2, (a,))

    def backward(grad):
        a._accumulate(grad * 2.0 * a.data)

    out.backward_fn = backward
    return out


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    value = 1.0 / (1.0 + np.exp(-a.data))
    out = Tensor(value, (a,))

    def backward(grad):
        a._accumulate(grad * value * (1.0 - value))

    out.backward_fn = backward
    return out


def softplus(a) -> Tensor:
    """log(1 + e^x), computed stably."""
    a = as_tensor(a)
    value = np.logaddexp(0.0, a.data)
    out = Tensor(value, (a,))

    def backward(grad):
        a._accumulate(grad / (1.0 + np.exp(-a.data)))

    out.backward_fn = backward
    return out


def maximum(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    mask = (a.data >= b.data).astype(np.float64)
    out = Tensor(np.maximum(a.data, b.data), (a, b))

    def backward(grad):
        a._accumulate(grad * mask)
        b._accumulate(grad * (1.0 - mask))

    out.backward_fn = backward
    return out


def minimum(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    mask = (a.data <= b.data).astype(np.float64)
    out = Tensor(np.minimum(a.data, b.data), (a, b))

    def backward(grad):
        a._accumulate(grad * mask)
        b._accumulate(grad * (1.0 - mask))

    out.backward_fn = backward
    return out


def total(a) -> Tensor:
    """Sum of all elements."""
    a = as_tensor(a)
    out = Tensor(np.sum(a.data), (a,))

    def backward(grad):
        a._accumulate(np.full_like(a.data, float(grad)))

    out.backward_fn = backward
    return out


def sum_axis(a, axis: int) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.sum(a.data, axis=axis), (a,))

    def backward(grad):
        a._accumulate(np.expand_dims(grad, axis) * np.ones_like(a.data))

    out.backward_fn = backward
    return out


def mean(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.mean(a.data), (a,))

    def backward(grad):
        a._accumulate(np.full_like(a.data, float(grad) / a.data.size))

    out.backward_fn = backward
    return out


def log_softmax(a) -> Tensor:
    """Row-wise log softmax over the last axis."""
    a = as_tensor(a)
    shifted = a.data - np.max(a.data, axis=-1, keepdims=True)
    value = shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))
    out = Tensor(value, (a,))

    def backward(grad):
        soft = np.exp(value)
        a._accumulate(grad - soft * np.sum(grad, axis=-1, keepdims=True))

    out.backward_fn = backward
    return out


def gather_rows(a, indices) -> Tensor:
    """out[b] = a[b, indices[b]] for a 2-D tensor."""
    a = as_tensor(a)
    idx = np.asarray(indices, dtype=int)
    rows = np.arange(a.data.shape[0])
    out = Tensor(a.data[rows, idx], (a,))

    def backward(grad):
        full = np.zeros_like(a.data)
        np.add.at(full, (rows, idx), grad)
        a._accumulate(full)

    out.backward_fn = backward
    return out


class Adam:
    """Adam with bias correction over an explicit parameter list."""

    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        self.step_count += 1
        b1c = 1.0 - self.beta1 ** self.step_count
        b2c = 1.0 - self.beta2 ** self.step_count
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g ** 2
            m_hat = self.m[i] / b1c
            v_hat = self.v[i] / b2c
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def clip_grad_norm(params, max_norm: float) -> float:
    """Scale gradients in place so their global L2 norm is at most max_norm."""
    sq = 0.0
    for p in params:
        if p.grad is not None:
            sq += float(np.sum(p.grad ** 2))
    norm = float(np.sqrt(sq))
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for p in params:
            if p.grad is not None:
                p.grad = p.grad * scale
    return norm
