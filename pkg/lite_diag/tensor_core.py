# Copyright 2026 The lite-diag Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Recorded-operation reverse-mode differentiation over numpy arrays.

A `Tensor` wraps an ndarray. While a `Recording` is active on the current
thread, every op whose inputs require gradients appends a node holding a
backward closure; `Recording.backward` walks those nodes in reverse order.

Feature maps are channel-major, `(B, C, T)`. Code outside the networks uses
the `(B, T, C)` convention and converts with `to_channel_major` and
`to_time_major`.
"""

from __future__ import annotations

import contextlib
import dataclasses
import logging
import threading
from typing import Any, Callable, Iterator, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from lite_diag.errors import NumericalError, RecordingError, ShapeError

logger = logging.getLogger(__name__)

_DTYPES = {32: np.float32, 64: np.float64}
_default_bits = 32
_local = threading.local()


def set_default_precision(bits: int) -> None:
    """Sets the process-wide floating point width (32 or 64)."""
    global _default_bits
    if bits not in _DTYPES:
        raise ValueError(f"precision must be 32 or 64, got {bits}")
    _default_bits = bits


@contextlib.contextmanager
def precision(bits: int) -> Iterator[None]:
    """Overrides the floating point width on the current thread."""
    if bits not in _DTYPES:
        raise ValueError(f"precision must be 32 or 64, got {bits}")
    previous = getattr(_local, "bits", None)
    _local.bits = bits
    try:
        yield
    finally:
        _local.bits = previous


def current_dtype() -> np.dtype:
    bits = getattr(_local, "bits", None) or _default_bits
    return np.dtype(_DTYPES[bits])


class Tensor:
    """An n-dimensional array that can take part in a recording."""

    __slots__ = ("data", "requires_grad", "grad", "name", "_node", "_retain")
    __array_priority__ = 100

    def __init__(
        self,
        data: Any,
        requires_grad: bool = False,
        name: str | None = None,
        dtype: Any = None,
    ):
        self.data = np.asarray(
            data, dtype=current_dtype() if dtype is None else dtype
        )
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name
        self._node: _Node | None = None
        self._retain = False

    @classmethod
    def _wrap(cls, data: np.ndarray) -> Tensor:
        out = cls.__new__(cls)
        out.data = data
        out.requires_grad = False
        out.grad = None
        out.name = None
        out._node = None
        out._retain = False
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def detach(self) -> Tensor:
        return Tensor._wrap(self.data)

    def retain_grad(self) -> Tensor:
        """Keeps the gradient of this intermediate tensor after backward."""
        self._retain = True
        return self

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label})"

    def __add__(self, other: Any) -> Tensor:
        return add(self, other)

    def __radd__(self, other: Any) -> Tensor:
        return add(other, self)

    def __sub__(self, other: Any) -> Tensor:
        return sub(self, other)

    def __rsub__(self, other: Any) -> Tensor:
        return sub(other, self)

    def __mul__(self, other: Any) -> Tensor:
        return mul(self, other)

    def __rmul__(self, other: Any) -> Tensor:
        return mul(other, self)

    def __truediv__(self, other: float) -> Tensor:
        return mul(self, 1.0 / float(other))

    def __neg__(self) -> Tensor:
        return mul(self, -1.0)

    def __matmul__(self, other: Tensor) -> Tensor:
        return matmul(self, other)

    def __getitem__(self, index: Any) -> Tensor:
        return getitem(self, index)

    def sum(self, axis: Any = None, keepdims: bool = False) -> Tensor:
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Any = None, keepdims: bool = False) -> Tensor:
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: int) -> Tensor:
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes: int) -> Tensor:
        return transpose(self, axes or None)


def parameter(data: Any, name: str | None = None) -> Tensor:
    return Tensor(data, requires_grad=True, name=name)


def as_tensor(value: Any) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


@dataclasses.dataclass(eq=False)
class _Node:
    op: str
    out: Tensor
    parents: tuple[Tensor, ...]
    backward: Callable[[np.ndarray], Sequence[np.ndarray | None]]
    recording: Recording
    generation: int


def _stack() -> list[Recording | None]:
    stack = getattr(_local, "recordings", None)
    if stack is None:
        stack = []
        _local.recordings = stack
    return stack


def _active() -> Recording | None:
    stack = _stack()
    return stack[-1] if stack else None


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Suspends recording on the current thread."""
    stack = _stack()
    stack.append(None)
    try:
        yield
    finally:
        stack.pop()


class Recording:
    """Append-only record of ops for one forward/backward unit of work.

    A recording belongs to the thread that entered it. After `backward` the
    recording is consumed; the next recorded op starts a fresh forward pass.
    """

    def __init__(self):
        self._nodes: list[_Node] = []
        self._consumed = False
        self._generation = 0

    def __enter__(self) -> Recording:
        _stack().append(self)
        return self

    def __exit__(self, *exc_info: Any) -> bool:
        _stack().pop()
        return False

    def __len__(self) -> int:
        return len(self._nodes)

    def reset(self) -> None:
        self._nodes.clear()
        self._consumed = False
        self._generation += 1

    def record(
        self,
        op: str,
        out: Tensor,
        parents: Sequence[Tensor],
        backward: Callable[[np.ndarray], Sequence[np.ndarray | None]],
    ) -> None:
        if self._consumed:
            self.reset()
        node = _Node(op, out, tuple(parents), backward, self, self._generation)
        out._node = node
        out.requires_grad = True
        self._nodes.append(node)

    def _owns(self, node: _Node | None) -> bool:
        return (
            node is not None
            and node.recording is self
            and node.generation == self._generation
        )

    def backward(self, loss: Tensor) -> None:
        """Populates `.grad` on every leaf that contributed to `loss`."""
        if self._consumed:
            raise RecordingError(
                "backward called twice without a fresh forward pass"
            )
        if loss.size != 1:
            raise RecordingError(
                f"loss must be a scalar, got shape {loss.shape}"
            )
        if not self._owns(loss._node):
            raise RecordingError("loss was not produced by this recording")

        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        leaves: dict[int, Tensor] = {}
        end = self._nodes.index(loss._node)
        for node in reversed(self._nodes[: end + 1]):
            grad = grads.pop(id(node.out), None)
            if grad is None:
                continue
            if node.out._retain:
                node.out.grad = grad
            for parent, parent_grad in zip(node.parents, node.backward(grad)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + parent_grad
                else:
                    grads[key] = parent_grad
                if not self._owns(parent._node):
                    leaves[key] = parent
        for key, leaf in leaves.items():
            leaf.grad = grads[key]
        self._consumed = True


def _result(
    op: str,
    data: np.ndarray,
    parents: Sequence[Tensor],
    backward: Callable[[np.ndarray], Sequence[np.ndarray | None]],
) -> Tensor:
    out = Tensor._wrap(data)
    recording = _active()
    if recording is not None and any(p.requires_grad for p in parents):
        recording.record(op, out, parents, backward)
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NumericalError(f"{what} contains NaN or infinite values")


# Elementwise arithmetic


def add(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _result("add", a.data + b.data, (a, b), backward)


def sub(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _result("sub", a.data - b.data, (a, b), backward)


def mul(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        ga = _unbroadcast(g * b.data, a.shape) if a.requires_grad else None
        gb = _unbroadcast(g * a.data, b.shape) if b.requires_grad else None
        return ga, gb

    return _result("mul", a.data * b.data, (a, b), backward)


def tsum(x: Tensor, axis: Any = None, keepdims: bool = False) -> Tensor:
    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape),)

    return _result(
        "sum", np.sum(x.data, axis=axis, keepdims=keepdims), (x,), backward
    )


def tmean(x: Tensor, axis: Any = None, keepdims: bool = False) -> Tensor:
    if axis is None:
        count = x.size
    else:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        count = int(np.prod([x.shape[a] for a in axes]))
    return tsum(x, axis=axis, keepdims=keepdims) * (1.0 / count)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    def backward(g):
        return (g.reshape(x.shape),)

    return _result("reshape", x.data.reshape(shape), (x,), backward)


def transpose(x: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    axes = tuple(axes) if axes is not None else tuple(range(x.ndim))[::-1]
    inverse = tuple(np.argsort(axes))

    def backward(g):
        return (g.transpose(inverse),)

    return _result("transpose", x.data.transpose(axes), (x,), backward)


def getitem(x: Tensor, index: Any) -> Tensor:
    def backward(g):
        full = np.zeros_like(x.data)
        np.add.at(full, index, g)
        return (full,)

    return _result("getitem", x.data[index], (x,), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Batched matrix product over the last two axes."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError("matmul operands need at least two dimensions")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(
            f"matmul inner dimensions differ: {a.shape} @ {b.shape}"
        )

    def backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _result("matmul", np.matmul(a.data, b.data), (a, b), backward)


def concat(tensors: Sequence[Tensor], axis: int = 1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    reference = tensors[0].shape
    for t in tensors[1:]:
        if t.ndim != len(reference) or any(
            t.shape[d] != reference[d]
            for d in range(len(reference))
            if d != axis % len(reference)
        ):
            raise ShapeError(
                f"cannot concatenate {t.shape} with {reference} on axis {axis}"
            )
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    data = np.concatenate([t.data for t in tensors], axis=axis)
    return _result("concat", data, tensors, backward)


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    """Joins two `(B, C, T)` maps along the channel axis, `a` first."""
    return concat((a, b), axis=1)


# Activations and normalizations


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def backward(g):
        return (g * mask,)

    return _result("relu", x.data * mask, (x,), backward)


def sigmoid(x: Tensor) -> Tensor:
    s = 0.5 * (1.0 + np.tanh(0.5 * x.data))

    def backward(g):
        return (g * s * (1.0 - s),)

    return _result("sigmoid", s, (x,), backward)


def pointwise(x: Tensor, kind: str) -> Tensor:
    if kind == "relu":
        return relu(x)
    if kind == "sigmoid":
        return sigmoid(x)
    raise ValueError(f"unknown pointwise kind {kind!r}")


def softmax_t(z: Tensor, tau: float = 1.0, axis: int = -1) -> Tensor:
    """Temperature-scaled softmax along `axis`."""
    if tau <= 0:
        raise ValueError(f"temperature must be positive, got {tau}")
    _check_finite(z.data, "logits")
    scaled = z.data / tau
    e = np.exp(scaled - scaled.max(axis=axis, keepdims=True))
    p = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        inner = np.sum(g * p, axis=axis, keepdims=True)
        return (p * (g - inner) / tau,)

    return _result("softmax", p, (z,), backward)


def log_softmax(z: Tensor, tau: float = 1.0, axis: int = -1) -> Tensor:
    if tau <= 0:
        raise ValueError(f"temperature must be positive, got {tau}")
    _check_finite(z.data, "logits")
    scaled = z.data / tau
    shifted = scaled - scaled.max(axis=axis, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - log_norm
    p = np.exp(out)

    def backward(g):
        return ((g - p * g.sum(axis=axis, keepdims=True)) / tau,)

    return _result("log_softmax", out, (z,), backward)


@dataclasses.dataclass
class RunningStats:
    """Running mean/variance buffers of one normalization layer."""

    mean: np.ndarray
    var: np.ndarray
    momentum: float = 0.1

    @classmethod
    def initial(cls, channels: int) -> RunningStats:
        dtype = current_dtype()
        return cls(np.zeros(channels, dtype), np.ones(channels, dtype))


def batchnorm1d(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    state: RunningStats,
    training: bool,
    eps: float = 1e-5,
) -> Tensor:
    """Per-channel normalization of `(B, C, T)` or `(B, C)` inputs."""
    if x.ndim not in (2, 3):
        raise ShapeError(f"batchnorm expects (B, C[, T]), got {x.shape}")
    axes = (0, 2) if x.ndim == 3 else (0,)
    view = (1, -1, 1) if x.ndim == 3 else (1, -1)
    g_ = gamma.data.reshape(view)
    b_ = beta.data.reshape(view)

    if training:
        count = x.size // x.shape[1]
        if count < 2:
            raise ShapeError("batchnorm in train mode needs B*T >= 2")
        mean = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        m = state.momentum
        state.mean = ((1 - m) * state.mean + m * mean).astype(state.mean.dtype)
        state.var = ((1 - m) * state.var + m * var).astype(state.var.dtype)
    else:
        count = 0
        mean, var = state.mean, state.var

    inv_std = 1.0 / np.sqrt(var.reshape(view) + eps)
    xhat = (x.data - mean.reshape(view)) * inv_std
    out = (g_ * xhat + b_).astype(x.dtype, copy=False)

    def backward(g):
        ggamma = np.sum(g * xhat, axis=axes)
        gbeta = np.sum(g, axis=axes)
        gxhat = g * g_
        if training:
            gx = (inv_std / count) * (
                count * gxhat
                - gxhat.sum(axis=axes, keepdims=True)
                - xhat * np.sum(gxhat * xhat, axis=axes, keepdims=True)
            )
        else:
            gx = gxhat * inv_std
        return gx, ggamma, gbeta

    return _result("batchnorm", out, (x, gamma, beta), backward)


def layer_norm(
    x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5
) -> Tensor:
    """Normalizes over the last (feature) axis."""
    if x.ndim < 1 or x.shape[-1] < 1:
        raise ShapeError(
            f"layer_norm needs a non-empty last axis, got {x.shape}"
        )
    d = x.shape[-1]
    if gamma.shape != (d,) or beta.shape != (d,):
        raise ShapeError(
            f"layer_norm over width {d} got gamma {gamma.shape}, "
            f"beta {beta.shape}"
        )
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    mean = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean) * inv_std
    out = gamma.data * xhat + beta.data

    def backward(g):
        gxhat = g * gamma.data
        gx = (inv_std / d) * (
            d * gxhat
            - gxhat.sum(axis=-1, keepdims=True)
            - xhat * np.sum(gxhat * xhat, axis=-1, keepdims=True)
        )
        lead = tuple(range(g.ndim - 1))
        return gx, np.sum(g * xhat, axis=lead), np.sum(g, axis=lead)

    return _result("layer_norm", out, (x, gamma, beta), backward)


def dropout(
    x: Tensor, rate: float, rng: np.random.Generator, training: bool
) -> Tensor:
    """Inverted dropout; the identity outside training."""
    if not training or rate <= 0.0:
        return x
    mask = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)

    def backward(g):
        return (g * mask,)

    return _result("dropout", x.data * mask, (x,), backward)


# Convolution, pooling and dense layers


def _padding(
    length: int, k: int, stride: int, padding: str
) -> tuple[int, int, int]:
    if padding == "same":
        out_len = -(-length // stride)
        total = max((out_len - 1) * stride + k - length, 0)
        left = total - total // 2
        return left, total - left, out_len
    if padding == "valid":
        out_len = (length - k) // stride + 1
        if out_len < 1:
            raise ShapeError(f"kernel {k} longer than input {length}")
        return 0, 0, out_len
    raise ValueError(f"unknown padding {padding!r}")


def _windows(
    x: np.ndarray, k: int, stride: int, left: int, right: int, fill: float
) -> tuple[np.ndarray, int]:
    if left or right:
        x = np.pad(
            x, ((0, 0), (0, 0), (left, right)), constant_values=fill
        )
    return sliding_window_view(x, k, axis=2)[:, :, ::stride, :], x.shape[2]


def conv1d(
    x: Tensor,
    w: Tensor,
    b: Tensor | None = None,
    stride: int = 1,
    padding: str = "same",
) -> Tensor:
    """1-D convolution of `(B, Cin, T)` with a `(Cout, Cin, k)` kernel."""
    if x.ndim != 3:
        raise ShapeError(f"conv1d expects (B, C, T), got {x.shape}")
    batch, cin, length = x.shape
    cout, cin_w, k = w.shape
    if cin != cin_w:
        raise ShapeError(f"input has {cin} channels, kernel expects {cin_w}")
    if batch == 0 or length == 0:
        raise ShapeError("conv1d on an empty input")
    if k < 1 or stride < 1:
        raise ShapeError(f"invalid kernel {k} or stride {stride}")

    left, right, out_len = _padding(length, k, stride, padding)
    windows, padded_len = _windows(x.data, k, stride, left, right, 0.0)
    # (B, T', Cout) -> (B, Cout, T')
    out = np.tensordot(windows, w.data, axes=([1, 3], [1, 2]))
    out = np.ascontiguousarray(out.transpose(0, 2, 1))
    if b is not None:
        out = out + b.data[None, :, None]

    def backward(g):
        gw = np.tensordot(g, windows, axes=([0, 2], [0, 2]))
        gwin = np.tensordot(g, w.data, axes=([1], [0]))  # (B, T', Cin, k)
        gxp = np.zeros((batch, cin, padded_len), dtype=g.dtype)
        span = stride * (out_len - 1) + 1
        for d in range(k):
            gxp[:, :, d : d + span : stride] += gwin[:, :, :, d].transpose(
                0, 2, 1
            )
        gx = gxp[:, :, left : left + length]
        gb = g.sum(axis=(0, 2)) if b is not None else None
        return gx, gw, gb

    parents = (x, w) if b is None else (x, w, b)
    return _result("conv1d", out, parents, backward)


def maxpool1d(
    x: Tensor, k: int, stride: int = 1, padding: str = "same"
) -> Tensor:
    """Window maximum per channel; padding never wins a window."""
    if x.ndim != 3:
        raise ShapeError(f"maxpool1d expects (B, C, T), got {x.shape}")
    batch, channels, length = x.shape
    if batch == 0 or length == 0:
        raise ShapeError("maxpool1d on an empty input")
    left, right, out_len = _padding(length, k, stride, padding)
    windows, padded_len = _windows(x.data, k, stride, left, right, -np.inf)
    argmax = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, argmax[..., None], axis=-1)[..., 0]

    def backward(g):
        gxp = np.zeros((batch, channels, padded_len), dtype=g.dtype)
        span = stride * (out_len - 1) + 1
        for d in range(k):
            gxp[:, :, d : d + span : stride] += np.where(argmax == d, g, 0)
        return (gxp[:, :, left : left + length],)

    return _result("maxpool1d", np.ascontiguousarray(out), (x,), backward)


def gap(x: Tensor, axis: int = -1) -> Tensor:
    """Global average over the temporal axis."""
    if x.shape[axis] < 1:
        raise ShapeError("global average pooling over an empty axis")
    return tmean(x, axis=axis)


def dense(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """Affine map `x @ W.T + b` over the last axis of `x`."""
    if w.ndim != 2 or x.shape[-1] != w.shape[1]:
        raise ShapeError(
            f"dense: input {x.shape} does not fit weight {w.shape}"
        )
    if b is not None and b.shape != (w.shape[0],):
        raise ShapeError(f"dense: bias {b.shape} does not fit weight {w.shape}")
    out = x.data @ w.data.T
    if b is not None:
        out = out + b.data

    def backward(g):
        g2 = g.reshape(-1, w.shape[0])
        x2 = x.data.reshape(-1, w.shape[1])
        gx = g @ w.data
        gw = g2.T @ x2
        gb = g2.sum(axis=0) if b is not None else None
        return gx, gw, gb

    parents = (x, w) if b is None else (x, w, b)
    return _result("dense", out, parents, backward)


# Layout helpers


def to_channel_major(x: np.ndarray) -> np.ndarray:
    """`(..., T, C)` -> `(..., C, T)`."""
    return np.ascontiguousarray(np.swapaxes(x, -1, -2))


def to_time_major(x: np.ndarray) -> np.ndarray:
    """`(..., C, T)` -> `(..., T, C)`."""
    return np.ascontiguousarray(np.swapaxes(x, -1, -2))


def grad_check(
    f: Callable[[Tensor], Tensor], x0: Any, h: float = 1e-4
) -> float:
    """Max relative error between backward and central differences.

    `f` maps a tensor shaped like `x0` to a scalar tensor. Both passes run in
    64-bit precision.
    """
    with precision(64):
        point = np.array(x0, dtype=np.float64)
        with Recording() as recording:
            x = Tensor(point.copy(), requires_grad=True)
            recording.backward(f(x))
        analytic = (
            np.zeros_like(point) if x.grad is None else np.asarray(x.grad)
        )

        numeric = np.zeros_like(point)
        work = point.copy()
        flat = work.reshape(-1)
        out = numeric.reshape(-1)
        with no_grad():
            for i in range(flat.size):
                original = flat[i]
                flat[i] = original + h
                upper = float(np.sum(f(Tensor(work)).data))
                flat[i] = original - h
                lower = float(np.sum(f(Tensor(work)).data))
                flat[i] = original
                out[i] = (upper - lower) / (2.0 * h)

    if np.isnan(analytic).any() or np.isnan(numeric).any():
        raise NumericalError("gradient check produced NaN")
    error = np.abs(analytic - numeric) / np.maximum(1e-8, np.abs(numeric))
    return float(error.max()) if error.size else 0.0
