"""
Component weighting of the sub-bands
X_out = (W - 1/2) * X_in + X_in, with W = Sigmoid(Norm(Conv(X_in)))
"""

from kernels import ops
from kernels.tensor import Tensor
from tlp.params import WeightNetParams
from utils.error_handler import ShapeError


def weight_matrix(x, theta_w: WeightNetParams, eps: float = 1e-5) -> Tensor:
    """Per-channel, per-frame coefficients in (0, 1)"""
    h = ops.conv1d(x, theta_w.conv)
    h = ops.normalize(theta_w.norm, h, theta_w.scale, theta_w.shift, eps)
    return ops.apply_activation("sigmoid", h)


def reweight(x, w, residual: bool = True) -> Tensor:
    """Residual form (W - 1/2) X + X, or the plain product W X"""
    x = ops.to_signal(x)
    if w.shape != x.shape:
        raise ShapeError(f"weight matrix {w.shape} does not match signal {x.shape}")
    if residual:
        return ops.add(ops.mul(ops.sub(w, 0.5), x), x)
    return ops.mul(w, x)


def component_weight(x, theta_w: WeightNetParams, residual: bool = True, eps: float = 1e-5) -> Tensor:
    x = ops.to_signal(x)
    if x.shape[1] != theta_w.conv.in_channels:
        raise ShapeError(f"weighting net built for {theta_w.conv.in_channels} channels, got {x.shape[1]}")
    return reweight(x, weight_matrix(x, theta_w, eps), residual)
