"""
Differentiable operations
Signals are laid out as [batch, channel, time]
"""

import logging
from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from kernels.params import ConvParams
from kernels.tensor import Tensor, as_tensor, record
from utils.error_handler import ConfigurationError, NumericalError, ShapeError

logger = logging.getLogger(__name__)

ACTIVATIONS = ("relu", "tanh", "sigmoid")
NORMALIZATIONS = ("instance", "batch")


def to_signal(x) -> Tensor:
    """Validate a TemporalSignal: [T], [C, T] or [N, C, T], finite, C >= 1, T >= 1.

    Arrays with fewer than three axes are lifted to [N, C, T]; tensors must already be 3D.
    """
    if isinstance(x, Tensor):
        tensor = x
    else:
        data = np.asarray(x, dtype=np.float64)
        if data.ndim == 1:
            data = data[None, None, :]
        elif data.ndim == 2:
            data = data[None, :, :]
        tensor = Tensor(data)
    if tensor.ndim != 3:
        raise ShapeError(f"signal must be [batch, channel, time], got shape {tensor.shape}")
    if tensor.shape[1] < 1 or tensor.shape[2] < 1:
        raise ShapeError(f"signal needs at least one channel and one frame, got shape {tensor.shape}")
    if not np.all(np.isfinite(tensor.data)):
        raise NumericalError("signal contains NaN or Inf values")
    return tensor


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ==================== ELEMENTWISE ====================

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return record("add", a.data + b.data, (a, b),
                  lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return record("sub", a.data - b.data, (a, b),
                  lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return record("mul", a.data * b.data, (a, b),
                  lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def square(a) -> Tensor:
    a = as_tensor(a)
    return record("square", a.data * a.data, (a,), lambda g: (2.0 * a.data * g,))


def mean(a) -> Tensor:
    """Mean over every element, as a scalar"""
    a = as_tensor(a)
    return record("mean", np.asarray(a.data.mean()), (a,),
                  lambda g: (np.full(a.shape, float(g) / a.size),))


def total(a) -> Tensor:
    """Sum over every element, as a scalar"""
    a = as_tensor(a)
    return record("sum", np.asarray(a.data.sum()), (a,),
                  lambda g: (np.full(a.shape, float(g)),))


def concat(tensors: Sequence, axis: int = 1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, bounds, axis=axis))

    return record("concat", np.concatenate([t.data for t in tensors], axis=axis), tensors, vjp)


# ==================== TIME AXIS ====================

def pad_to_even(x: Tensor) -> Tensor:
    """Replicate the final frame once when T is odd"""
    t = x.shape[-1]
    if t % 2 == 0:
        return x

    def vjp(g):
        grad = g[..., :t].copy()
        grad[..., -1] += g[..., t]
        return (grad,)

    return record("pad_to_even", np.concatenate([x.data, x.data[..., -1:]], axis=-1), (x,), vjp)


def time_slice(x: Tensor, start: int, step: int = 2) -> Tensor:
    """Frames start, start+step, ... along the last axis"""
    def vjp(g):
        grad = np.zeros_like(x.data)
        grad[..., start::step] = g
        return (grad,)

    return record("time_slice", x.data[..., start::step], (x,), vjp)


def mean_time(x: Tensor) -> Tensor:
    """Global average over time: [N, C, T] -> [N, C]"""
    t = x.shape[-1]
    return record("mean_time", x.data.mean(axis=-1), (x,),
                  lambda g: (np.repeat(g[..., None] / t, t, axis=-1),))


# ==================== LAYERS ====================

def apply_activation(kind: str, x) -> Tensor:
    """Elementwise relu, tanh or sigmoid"""
    x = as_tensor(x)
    if kind == "relu":
        mask = x.data > 0
        return record("relu", np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))
    if kind == "tanh":
        y = np.tanh(x.data)
        return record("tanh", y, (x,), lambda g: (g * (1.0 - y * y),))
    if kind == "sigmoid":
        y = _sigmoid(x.data)
        return record("sigmoid", y, (x,), lambda g: (g * y * (1.0 - y),))
    raise ConfigurationError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def conv1d(x, p: ConvParams) -> Tensor:
    """Grouped cross-correlation with "same" zero padding and stride 1.

    y[n, o, t] = bias[o] + sum_j w[o, c, j] * x[n, c, t + j - k // 2]
    """
    x = to_signal(x)
    n, c_in, t = x.shape
    w = p.weight.data
    c_out, cin_g, k = w.shape
    g = p.groups
    if c_in != p.in_channels:
        raise ShapeError(f"conv expects {p.in_channels} input channels (groups={g}), got {c_in}")
    if k > 2 * t + 1:
        raise ConfigurationError(f"kernel width {k} too large for sequence length {t}")

    left = k // 2
    xp = np.pad(x.data, ((0, 0), (0, 0), (left, k - 1 - left)))
    windows = sliding_window_view(xp, k, axis=2)  # [n, c_in, t, k]
    cout_g = c_out // g

    if g == 1:
        cols = windows.transpose(0, 2, 1, 3).reshape(n * t, c_in * k)
        w2 = w.reshape(c_out, c_in * k)
        y = (cols @ w2.T).reshape(n, t, c_out).transpose(0, 2, 1)
    else:
        win_g = windows.reshape(n, g, cin_g, t, k)
        w_g = w.reshape(g, cout_g, cin_g, k)
        y = np.einsum("ngctk,gock->ngot", win_g, w_g).reshape(n, c_out, t)
    y = y + p.bias.data[None, :, None]

    def vjp(gy):
        db = gy.sum(axis=(0, 2))
        if g == 1:
            gy2 = gy.transpose(0, 2, 1).reshape(n * t, c_out)
            dw = (gy2.T @ cols).reshape(c_out, cin_g, k)
            dwin = (gy2 @ w2).reshape(n, t, c_in, k).transpose(0, 2, 1, 3)
        else:
            gy_g = gy.reshape(n, g, cout_g, t)
            dw = np.einsum("ngctk,ngot->gock", win_g, gy_g).reshape(c_out, cin_g, k)
            dwin = np.einsum("ngot,gock->ngctk", gy_g, w_g).reshape(n, c_in, t, k)
        dxp = np.zeros(xp.shape)
        for j in range(k):
            dxp[:, :, j:j + t] += dwin[..., j]
        return dxp[:, :, left:left + t], dw, db

    return record("conv1d", y, (x, p.weight, p.bias), vjp)


def normalize(kind: str, x, scale: Optional[Tensor] = None, shift: Optional[Tensor] = None,
              eps: float = 1e-5) -> Tensor:
    """Standardize then scale-shift per channel.

    instance: statistics per (sample, channel) over time
    batch:    statistics per channel over (batch, time)
    """
    if kind not in NORMALIZATIONS:
        raise ConfigurationError(f"unknown normalization {kind!r}; expected one of {NORMALIZATIONS}")
    if eps <= 0:
        raise ConfigurationError("normalization eps must be positive")
    x = to_signal(x)
    c = x.shape[1]
    scale = scale if scale is not None else Tensor(np.ones(c))
    shift = shift if shift is not None else Tensor(np.zeros(c))
    if scale.shape != (c,) or shift.shape != (c,):
        raise ShapeError(f"normalization affine params must have shape ({c},)")

    axes = (2,) if kind == "instance" else (0, 2)
    mu = x.data.mean(axis=axes, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=axes, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std
    gamma = scale.data[None, :, None]
    y = xhat * gamma + shift.data[None, :, None]

    def vjp(g):
        dscale = (g * xhat).sum(axis=(0, 2))
        dshift = g.sum(axis=(0, 2))
        dxhat = g * gamma
        dx = inv_std * (dxhat - dxhat.mean(axis=axes, keepdims=True)
                        - xhat * (dxhat * xhat).mean(axis=axes, keepdims=True))
        return dx, dscale, dshift

    return record(f"{kind}_norm", y, (x, scale, shift), vjp)


def linear(x, weight: Tensor, bias: Tensor) -> Tensor:
    """[N, C] @ weight[K, C].T + bias[K]"""
    x = as_tensor(x)
    if x.ndim != 2 or weight.shape[1] != x.shape[1]:
        raise ShapeError(f"linear expects [N, {weight.shape[1]}], got {x.shape}")
    y = x.data @ weight.data.T + bias.data
    return record("linear", y, (x, weight, bias),
                  lambda g: (g @ weight.data, g.T @ x.data, g.sum(axis=0)))


def cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean softmax cross-entropy of integer labels"""
    labels = np.asarray(labels, dtype=np.int64)
    n = logits.shape[0]
    if labels.shape != (n,):
        raise ShapeError(f"expected {n} labels, got shape {labels.shape}")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1, keepdims=True))
    log_probs = z - log_norm
    loss = -log_probs[np.arange(n), labels].mean()

    def vjp(g):
        grad = np.exp(log_probs)
        grad[np.arange(n), labels] -= 1.0
        return (grad * (float(g) / n),)

    return record("cross_entropy", np.asarray(loss), (logits,), vjp)
