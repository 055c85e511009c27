"""
Hand-crafted and variant temporal pooling (kernel 2, stride 2)

Every method replicates the final frame when T is odd, so T_out = ceil(T / 2).
Within a window (a, b) = (x[2i], x[2i+1]).
"""

import logging
from typing import Callable, Tuple

import numpy as np

from kernels import ops
from kernels.tensor import Tensor, as_tensor, record
from utils.error_handler import ConfigurationError

logger = logging.getLogger(__name__)

FIXED_KINDS = ("max", "average")
POOL_MODES = ("train", "eval")


def _window_pool(op: str, x, forward: Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, Callable]]) -> Tensor:
    """Pool non-overlapping frame pairs.

    forward(a, b) returns y and a function g -> (da, db).
    """
    x = ops.pad_to_even(ops.to_signal(x))
    n, c, t = x.shape
    pairs = x.data.reshape(n, c, t // 2, 2)
    y, local_grad = forward(pairs[..., 0], pairs[..., 1])

    def vjp(g):
        da, db = local_grad(g)
        return (np.stack([da, db], axis=-1).reshape(n, c, t),)

    return record(op, y, (x,), vjp)


def _max_pair(a, b):
    first = a >= b
    return np.where(first, a, b), lambda g: (g * first, g * ~first)


def _average_pair(a, b):
    # midpoint in lifting form: second + (first - second) / 2
    return b + 0.5 * (a - b), lambda g: (0.5 * g, 0.5 * g)


def pool_fixed(kind: str, x) -> Tensor:
    """Max or average pooling; max routes its gradient to the first maximal element"""
    if kind in ("avg", "average"):
        return _window_pool("avg_pool", x, _average_pair)
    if kind == "max":
        return _window_pool("max_pool", x, _max_pair)
    raise ConfigurationError(f"unknown fixed pooling {kind!r}; expected one of {FIXED_KINDS}")


def pool_lp(x, p: float) -> Tensor:
    """(mean over the window of |x|^p)^(1/p), evaluated in log space"""
    if not np.isfinite(p) or p < 1:
        raise ConfigurationError(f"Lp pooling needs a finite p >= 1, got {p}")

    def forward(a, b):
        abs_a, abs_b = np.abs(a), np.abs(b)
        with np.errstate(divide="ignore"):
            log_a, log_b = np.log(abs_a), np.log(abs_b)
            log_y = (np.logaddexp(p * log_a, p * log_b) - np.log(2.0)) / p
        y = np.exp(log_y)

        def local_grad(g):
            # dy/da = sign(a) / 2 * (|a| / y)^(p - 1); zero where the window is all zero
            live = y > 0
            safe_log_y = np.where(live, log_y, 0.0)
            with np.errstate(invalid="ignore", over="ignore"):
                ratio_a = np.where(abs_a > 0, np.exp((p - 1.0) * (log_a - safe_log_y)), 0.0 if p > 1 else 1.0)
                ratio_b = np.where(abs_b > 0, np.exp((p - 1.0) * (log_b - safe_log_y)), 0.0 if p > 1 else 1.0)
            da = np.where(live, 0.5 * np.sign(a) * ratio_a, 0.0) * g
            db = np.where(live, 0.5 * np.sign(b) * ratio_b, 0.0) * g
            return da, db

        return y, local_grad

    return _window_pool("lp_pool", x, forward)


def pool_mixed(x, blend) -> Tensor:
    """lambda * max + (1 - lambda) * average with lambda = sigmoid(blend)"""
    blend = as_tensor(blend)
    lam = ops.apply_activation("sigmoid", blend)
    mx = pool_fixed("max", x)
    avg = pool_fixed("average", x)
    return ops.add(avg, ops.mul(lam, ops.sub(mx, avg)))


def pool_stochastic(x, rng: np.random.Generator = None, mode: str = "train") -> Tensor:
    """Multinomial pooling with probabilities proportional to max(value, 0).

    train: sample one window element; eval: probability-weighted sum.
    All-nonpositive windows use uniform probabilities.
    """
    if mode not in POOL_MODES:
        raise ConfigurationError(f"unknown stochastic pooling mode {mode!r}; expected one of {POOL_MODES}")
    if mode == "train" and rng is None:
        raise ConfigurationError("stochastic pooling in train mode needs a random generator")

    def forward(a, b):
        ra, rb = np.maximum(a, 0.0), np.maximum(b, 0.0)
        mass = ra + rb
        empty = mass == 0
        safe = np.where(empty, 1.0, mass)
        prob_a = np.where(empty, 0.5, ra / safe)

        if mode == "train":
            first = rng.random(a.shape) < prob_a
            return np.where(first, a, b), lambda g: (g * first, g * ~first)

        y = np.where(empty, 0.5 * (a + b), (ra * a + rb * b) / safe)

        def local_grad(g):
            # dy/dv = (r + r' (v - y)) / sum(r); uniform windows average
            ga = np.where(empty, 0.5, (ra + (a > 0) * (a - y)) / safe)
            gb = np.where(empty, 0.5, (rb + (b > 0) * (b - y)) / safe)
            return g * ga, g * gb

        return y, local_grad

    return _window_pool(f"stochastic_pool_{mode}", x, forward)


def pool_soft(x) -> Tensor:
    """Softmax-weighted window average: sum x e^x / sum e^x"""
    def forward(a, b):
        top = np.maximum(a, b)
        ea, eb = np.exp(a - top), np.exp(b - top)
        wa = ea / (ea + eb)
        wb = 1.0 - wa
        y = wa * a + wb * b
        return y, lambda g: (g * wa * (1.0 + a - y), g * wb * (1.0 + b - y))

    return _window_pool("soft_pool", x, forward)
