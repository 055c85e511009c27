"""
Fusion of the weighted sub-bands s*, d*
"""

from typing import Optional

from kernels import ops
from kernels.tensor import Tensor
from tlp.params import FusionParams
from utils.error_handler import ConfigurationError, ShapeError

FUSIONS = ("sum", "concat", "bottleneck", "only_s")


def fuse(strategy: str, s, d, theta_f: Optional[FusionParams] = None, eps: float = 1e-5) -> Tensor:
    """sum: s* + d*; concat: [s*; d*] on channels; bottleneck: ReLU(BN(Conv1x1([s*; d*]))); only_s: s*"""
    s, d = ops.to_signal(s), ops.to_signal(d)
    if s.shape != d.shape:
        raise ShapeError(f"cannot fuse s {s.shape} with d {d.shape}")

    if strategy == "sum":
        return ops.add(s, d)
    if strategy == "only_s":
        return s
    if strategy == "concat":
        return ops.concat([s, d], axis=1)
    if strategy == "bottleneck":
        if theta_f is None:
            raise ConfigurationError("bottleneck fusion needs its fusion parameters")
        h = ops.conv1d(ops.concat([s, d], axis=1), theta_f.conv)
        h = ops.normalize("batch", h, theta_f.scale, theta_f.shift, eps)
        return ops.apply_activation("relu", h)
    raise ConfigurationError(f"unknown fusion {strategy!r}; expected one of {FUSIONS}")
