"""
Lifting process: split, predict, update and their exact inverse

Split convention (0-based storage): x_o = x[0::2], x_e = x[1::2].
    d = x_o - P(x_e)
    s = x_e + U(d)
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

from kernels import ops
from kernels.tensor import Tensor, record
from tlp.params import LiftNetParams
from utils.error_handler import ShapeError

logger = logging.getLogger(__name__)

LiftFn = Union[LiftNetParams, Callable[[Tensor], Tensor]]


@dataclass
class LiftPair:
    """Approximation s (low-pass) and difference d (high-pass) at half length"""
    s: Tensor
    d: Tensor

    def __post_init__(self):
        if self.s.shape != self.d.shape:
            raise ShapeError(f"sub-bands disagree: s {self.s.shape} vs d {self.d.shape}")


def split(x) -> Tuple[Tensor, Tensor]:
    """(x_e, x_o) after replicate-padding odd lengths"""
    x = ops.pad_to_even(ops.to_signal(x))
    return ops.time_slice(x, 1), ops.time_slice(x, 0)


def interleave(x_o: Tensor, x_e: Tensor) -> Tensor:
    """Inverse of split: x[0::2] = x_o, x[1::2] = x_e"""
    if x_o.shape != x_e.shape:
        raise ShapeError(f"cannot interleave {x_o.shape} with {x_e.shape}")
    n, c, half = x_o.shape
    out = np.empty((n, c, 2 * half))
    out[..., 0::2] = x_o.data
    out[..., 1::2] = x_e.data
    return record("interleave", out, (x_o, x_e), lambda g: (g[..., 0::2], g[..., 1::2]))


def run_lift_net(net: LiftFn, x: Tensor) -> Tensor:
    """Apply a predictor/updater net, or any callable standing in for one"""
    if not isinstance(net, LiftNetParams):
        return net(x)
    if x.shape[1] != net.channels:
        raise ShapeError(f"lifting net built for {net.channels} channels, got {x.shape[1]}")
    h = x
    if net.depthwise is not None:
        h = ops.apply_activation("relu", ops.conv1d(h, net.depthwise))
    return ops.apply_activation("tanh", ops.conv1d(h, net.projection))


def predict(x_e, theta_p: LiftFn) -> Tensor:
    return run_lift_net(theta_p, ops.to_signal(x_e))


def update(d, theta_u: LiftFn) -> Tensor:
    return run_lift_net(theta_u, ops.to_signal(d))


def lift_parts(x_e: Tensor, x_o: Tensor, theta_p: LiftFn, theta_u: LiftFn) -> LiftPair:
    d = ops.sub(x_o, predict(x_e, theta_p))
    s = ops.add(x_e, update(d, theta_u))
    return LiftPair(s=s, d=d)


def lift(x, theta_p: LiftFn, theta_u: LiftFn) -> LiftPair:
    x_e, x_o = split(x)
    return lift_parts(x_e, x_o, theta_p, theta_u)


def inverse_lift(s, d, theta_p: LiftFn, theta_u: LiftFn, length: Optional[int] = None) -> Tensor:
    """Undo lift with the same nets; `length` trims the replicate-padded frame of odd inputs"""
    s, d = ops.to_signal(s), ops.to_signal(d)
    if s.shape != d.shape:
        raise ShapeError(f"sub-bands disagree: s {s.shape} vs d {d.shape}")
    x_e = ops.sub(s, update(d, theta_u))
    x_o = ops.add(d, predict(x_e, theta_p))
    x = interleave(x_o, x_e)
    if length is not None:
        if not 0 < length <= x.shape[-1]:
            raise ShapeError(f"cannot trim a reconstruction of length {x.shape[-1]} to {length}")
        if length < x.shape[-1]:
            x = _trim(x, length)
    return x


def _trim(x: Tensor, length: int) -> Tensor:
    def vjp(g):
        grad = np.zeros_like(x.data)
        grad[..., :length] = g
        return (grad,)

    return record("trim", x.data[..., :length], (x,), vjp)


def haar_predict(x_e: Tensor) -> Tensor:
    return x_e


def haar_update(d: Tensor) -> Tensor:
    return ops.mul(d, 0.5)


def haar_lift(x) -> LiftPair:
    """Fixed Haar filters: s is the pairwise mean, d the pairwise difference x_o - x_e"""
    return lift(x, haar_predict, haar_update)
