"""Minimal numpy-backed tensors with reverse-mode differentiation.

Only the primitives the adapter, the frozen backbone and the flow-matching
loss actually need are implemented: depthwise 1D convolution, channel
layer-norm, linear maps, GELU, embedding lookup, masked multiplies and the
mean-squared-error reductions. Every primitive allocates fresh output
arrays; inputs are never written to. Two float widths are supported:
float32 for training and float64 for finite-difference verification.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

FLOAT_DTYPES = (np.float32, np.float64)

# Pinned tanh-approximation constants for GELU.
_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_CUBIC = 0.044715


class ShapeError(ValueError):
    """Operand dimensions disagree; carries the offending axis."""

    def __init__(self, message: str, axis: int | None = None):
        super().__init__(message)
        self.axis = axis


class Tensor:
    """A numpy array plus the graph record needed to backpropagate through it.

    Applying a primitive to tensors records the inputs and a backward
    closure on the result; the chain of these records is the tape that
    ``backward`` replays in reverse topological order.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in FLOAT_DTYPES:
            arr = arr.astype(np.float32)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def _tracked(self) -> bool:
        return self.requires_grad or self._backward is not None

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = g.astype(self.data.dtype, copy=True)
        else:
            self.grad = self.grad + g

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype.name}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)


class Parameter:
    """A named tensor; frozen parameters are never touched by optimizers."""

    __slots__ = ("name", "tensor", "trainable")

    def __init__(self, name: str, tensor: Tensor, trainable: bool = True):
        self.name = name
        self.tensor = tensor
        self.trainable = trainable
        tensor.requires_grad = True

    @property
    def data(self) -> np.ndarray:
        return self.tensor.data

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.tensor.shape}, trainable={self.trainable})"


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(data: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
    out = Tensor(data)
    if any(p._tracked() for p in parents):
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _check_2d(x: Tensor, what: str) -> None:
    if x.data.ndim != 2:
        raise ShapeError(f"{what} must be 2-dimensional, got shape {x.shape}")


def _check_last_dim(x: Tensor, vec: Tensor, what: str) -> None:
    if vec.data.ndim != 1 or vec.shape[0] != x.shape[-1]:
        raise ShapeError(
            f"{what} must have shape ({x.shape[-1]},) to match axis 1 of input "
            f"{x.shape}, got {vec.shape}",
            axis=1,
        )


def add(a, b) -> Tensor:
    """Elementwise sum; a 1-D right operand broadcasts over rows."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape == b.shape:
        def bwd(g):
            if a._tracked():
                a._accumulate(g)
            if b._tracked():
                b._accumulate(g)
    elif a.data.ndim == 2 and b.data.ndim == 1 and b.shape[0] == a.shape[1]:
        def bwd(g):
            if a._tracked():
                a._accumulate(g)
            if b._tracked():
                b._accumulate(g.sum(axis=0))
    else:
        raise ShapeError(f"cannot add shapes {a.shape} and {b.shape}", axis=0)
    return _result(a.data + b.data, (a, b), bwd)


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"cannot subtract shapes {a.shape} and {b.shape}", axis=0)

    def bwd(g):
        if a._tracked():
            a._accumulate(g)
        if b._tracked():
            b._accumulate(-g)

    return _result(a.data - b.data, (a, b), bwd)


def mul(a, b) -> Tensor:
    """Elementwise product; supports a python scalar or a (T, 1) mask column."""
    if isinstance(b, (int, float)):
        a = _as_tensor(a)
        s = float(b)

        def bwd_scalar(g):
            if a._tracked():
                a._accumulate(g * s)

        return _result(a.data * s, (a,), bwd_scalar)

    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape == b.shape:
        pass
    elif a.data.ndim == 2 and b.data.ndim == 2 and b.shape == (a.shape[0], 1):
        pass
    else:
        raise ShapeError(f"cannot multiply shapes {a.shape} and {b.shape}", axis=0)

    def bwd(g):
        if a._tracked():
            a._accumulate(g * b.data)
        if b._tracked():
            gb = g * a.data
            if b.shape != a.shape:
                gb = gb.sum(axis=1, keepdims=True)
            b._accumulate(gb)

    return _result(a.data * b.data, (a, b), bwd)


def matmul(a: Tensor, w: Tensor) -> Tensor:
    a, w = _as_tensor(a), _as_tensor(w)
    _check_2d(a, "matmul input")
    _check_2d(w, "matmul weight")
    if a.shape[1] != w.shape[0]:
        raise ShapeError(
            f"matmul inner dimensions disagree: input {a.shape} vs weight {w.shape}",
            axis=1,
        )

    def bwd(g):
        if a._tracked():
            a._accumulate(g @ w.data.T)
        if w._tracked():
            w._accumulate(a.data.T @ g)

    return _result(a.data @ w.data, (a, w), bwd)


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """x[T, Cin] @ weight[Cin, Cout] (+ bias[Cout])."""
    out = matmul(x, weight)
    if bias is not None:
        out = add(out, bias)
    return out


def gelu(x: Tensor) -> Tensor:
    """GELU, tanh approximation (the common ConvNeXt formulation)."""
    x = _as_tensor(x)
    xd = x.data
    inner = _GELU_C * (xd + _GELU_CUBIC * xd**3)
    t = np.tanh(inner)
    out = 0.5 * xd * (1.0 + t)

    def bwd(g):
        if x._tracked():
            d_inner = _GELU_C * (1.0 + 3.0 * _GELU_CUBIC * xd**2)
            dx = 0.5 * (1.0 + t) + 0.5 * xd * (1.0 - t**2) * d_inner
            x._accumulate(g * dx)

    return _result(out, (x,), bwd)


def layer_norm(x: Tensor, gain: Tensor, shift: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-position normalization over the channel axis, then affine."""
    x, gain, shift = _as_tensor(x), _as_tensor(gain), _as_tensor(shift)
    _check_2d(x, "layer_norm input")
    _check_last_dim(x, gain, "layer_norm gain")
    _check_last_dim(x, shift, "layer_norm shift")
    xd = x.data
    mu = xd.mean(axis=1, keepdims=True)
    xc = xd - mu
    var = (xc**2).mean(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    y = xc * inv
    out = y * gain.data + shift.data

    def bwd(g):
        if shift._tracked():
            shift._accumulate(g.sum(axis=0))
        if gain._tracked():
            gain._accumulate((g * y).sum(axis=0))
        if x._tracked():
            dy = g * gain.data
            dx = inv * (
                dy
                - dy.mean(axis=1, keepdims=True)
                - y * (dy * y).mean(axis=1, keepdims=True)
            )
            x._accumulate(dx)

    return _result(out, (x, gain, shift), bwd)


def conv1d_depthwise(x: Tensor, kernel: Tensor, bias: Tensor) -> Tensor:
    """Per-channel temporal convolution with same-length zero padding.

    out[t, c] = bias[c] + sum_j x[t + j - (k-1)/2, c] * kernel[c, j]
    """
    x, kernel, bias = _as_tensor(x), _as_tensor(kernel), _as_tensor(bias)
    _check_2d(x, "conv input")
    _check_2d(kernel, "conv kernel")
    T, C = x.shape
    if kernel.shape[0] != C:
        raise ShapeError(
            f"kernel channel count {kernel.shape[0]} does not match input channels {C}",
            axis=0,
        )
    k = kernel.shape[1]
    if k % 2 != 1:
        raise ShapeError(f"kernel width must be odd, got {k}", axis=1)
    _check_last_dim(x, bias, "conv bias")

    off = (k - 1) // 2
    padded = np.zeros((T + k - 1, C), dtype=x.data.dtype)
    padded[off : off + T] = x.data
    out = np.tile(bias.data, (T, 1))
    for j in range(k):
        out = out + padded[j : j + T] * kernel.data[:, j]

    def bwd(g):
        if bias._tracked():
            bias._accumulate(g.sum(axis=0))
        if kernel._tracked():
            dk = np.empty_like(kernel.data)
            for j in range(k):
                dk[:, j] = (g * padded[j : j + T]).sum(axis=0)
            kernel._accumulate(dk)
        if x._tracked():
            dpad = np.zeros_like(padded)
            for j in range(k):
                dpad[j : j + T] += g * kernel.data[:, j]
            x._accumulate(dpad[off : off + T])

    return _result(out, (x, kernel, bias), bwd)


def embedding(table: Tensor, ids: Sequence[int]) -> Tensor:
    """Row gather; backward scatter-adds into the table gradient."""
    table = _as_tensor(table)
    _check_2d(table, "embedding table")
    idx = np.asarray(ids, dtype=np.int64)
    if idx.ndim != 1:
        raise ShapeError(f"ids must be a flat sequence, got shape {idx.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        bad = int(idx[(idx < 0) | (idx >= table.shape[0])][0])
        raise IndexError(f"token id {bad} out of range for table of {table.shape[0]} rows")

    def bwd(g):
        if table._tracked():
            dt = np.zeros_like(table.data)
            np.add.at(dt, idx, g)
            table._accumulate(dt)

    return _result(table.data[idx], (table,), bwd)


def concat_cols(parts: Iterable[Tensor]) -> Tensor:
    """Concatenate 2-D tensors along the channel axis."""
    parts = [_as_tensor(p) for p in parts]
    if not parts:
        raise ShapeError("concat of zero tensors")
    rows = parts[0].shape[0]
    for p in parts:
        _check_2d(p, "concat operand")
        if p.shape[0] != rows:
            raise ShapeError(
                f"concat row counts disagree: {rows} vs {p.shape[0]}", axis=0
            )
    widths = [p.shape[1] for p in parts]
    bounds = np.cumsum([0] + widths)

    def bwd(g):
        for p, lo, hi in zip(parts, bounds[:-1], bounds[1:]):
            if p._tracked():
                p._accumulate(g[:, lo:hi])

    return _result(np.concatenate([p.data for p in parts], axis=1), parts, bwd)


def tsum(x: Tensor) -> Tensor:
    """Sum of all entries, as a scalar tensor."""
    x = _as_tensor(x)

    def bwd(g):
        if x._tracked():
            x._accumulate(np.full_like(x.data, float(g)))

    return _result(np.asarray(x.data.sum(), dtype=x.data.dtype), (x,), bwd)


def tmean(x: Tensor) -> Tensor:
    """Mean of all entries, as a scalar tensor."""
    x = _as_tensor(x)
    n = x.data.size

    def bwd(g):
        if x._tracked():
            x._accumulate(np.full_like(x.data, float(g) / n))

    return _result(np.asarray(x.data.mean(), dtype=x.data.dtype), (x,), bwd)


def mse(a: Tensor, b: Tensor) -> Tensor:
    """Mean squared error over all entries."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"mse shapes disagree: {a.shape} vs {b.shape}", axis=0)
    diff = a.data - b.data
    n = diff.size

    def bwd(g):
        scale = 2.0 * float(g) / n
        if a._tracked():
            a._accumulate(scale * diff)
        if b._tracked():
            b._accumulate(-scale * diff)

    return _result(np.asarray((diff**2).mean(), dtype=a.data.dtype), (a, b), bwd)


def _toposort(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor) -> None:
    """Accumulate gradients of a scalar loss into every tracked tensor.

    Each recorded node is visited exactly once, in reverse topological
    order. Tensors not connected to the loss simply keep a None gradient.
    """
    if loss.data.size != 1:
        raise ShapeError(f"backward requires a scalar loss, got shape {loss.shape}")
    order = _toposort(loss)
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
