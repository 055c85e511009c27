"""
TLP layer: lifting process, component weighting and fusion
"""

import logging
from typing import List, NamedTuple

from kernels import ops
from kernels.flops import LayerSpec
from kernels.tensor import Tensor
from tlp.fusion import fuse
from tlp.lifting import lift_parts, split
from tlp.losses import lift_losses
from tlp.params import LiftNetParams, TlpParams
from tlp.weighting import component_weight

logger = logging.getLogger(__name__)


class TlpOutput(NamedTuple):
    y: Tensor
    c_u: Tensor
    c_p: Tensor


def tlp_forward(x, theta: TlpParams) -> TlpOutput:
    """Downsample x [N, C, T] to [N, C', ceil(T/2)] and return this layer's c_u, c_p"""
    x = ops.to_signal(x)
    x_e, x_o = split(x)
    pair = lift_parts(x_e, x_o, theta.predictor, theta.updater)
    c_u, c_p = lift_losses(pair.s, pair.d, x_o)

    cfg = theta.config
    s_star, d_star = pair.s, pair.d
    if theta.weight_s is not None:
        s_star = component_weight(pair.s, theta.weight_s, cfg.residual_weighting, cfg.norm_eps)
        d_star = component_weight(pair.d, theta.weight_d, cfg.residual_weighting, cfg.norm_eps)

    y = fuse(cfg.fusion, s_star, d_star, theta.fusion_net, cfg.norm_eps)
    return TlpOutput(y=y, c_u=c_u, c_p=c_p)


def describe_lift_net(net: LiftNetParams, length: int, name: str, component: str = "tlp") -> List[LayerSpec]:
    """Layer list of a predictor/updater net running on `length` frames"""
    c = net.channels
    layers = []
    if net.depthwise is not None:
        layers += [
            LayerSpec("conv", c, c, net.depthwise.kernel_width, groups=c, length=length,
                      name=f"{name}.depthwise", component=component),
            LayerSpec("activation", c, length=length, name=f"{name}.relu", component=component),
        ]
    layers += [
        LayerSpec("conv", c, c, net.projection.kernel_width, length=length,
                  name=f"{name}.projection", component=component),
        LayerSpec("activation", c, length=length, name=f"{name}.tanh", component=component),
    ]
    return layers


def describe_tlp(theta: TlpParams, length: int, name: str = "tlp", component: str = "tlp") -> List[LayerSpec]:
    """Layer list of one TLP layer applied to an input of `length` frames"""
    c = theta.channels
    half = (length + 1) // 2
    layers = describe_lift_net(theta.predictor, half, f"{name}.predictor", component)
    layers.append(LayerSpec("elementwise", c, length=half, name=f"{name}.difference", component=component))
    layers += describe_lift_net(theta.updater, half, f"{name}.updater", component)
    layers.append(LayerSpec("elementwise", c, length=half, name=f"{name}.approximation", component=component))

    if theta.weight_s is not None:
        for band, net in (("s", theta.weight_s), ("d", theta.weight_d)):
            layers += [
                LayerSpec("conv", c, c, net.conv.kernel_width, length=half,
                          name=f"{name}.weight_{band}.conv", component=component),
                LayerSpec("norm", c, length=half, name=f"{name}.weight_{band}.norm", component=component),
                LayerSpec("activation", c, length=half, name=f"{name}.weight_{band}.sigmoid", component=component),
                LayerSpec("elementwise", c, length=half, name=f"{name}.weight_{band}.apply", component=component),
            ]

    fusion = theta.config.fusion
    if fusion == "sum":
        layers.append(LayerSpec("elementwise", c, length=half, name=f"{name}.fuse", component=component))
    elif fusion == "bottleneck":
        layers += [
            LayerSpec("conv", 2 * c, c, 1, length=half, name=f"{name}.fusion.conv", component=component),
            LayerSpec("norm", c, length=half, name=f"{name}.fusion.norm", component=component),
            LayerSpec("activation", c, length=half, name=f"{name}.fusion.relu", component=component),
        ]
    else:
        layers.append(LayerSpec("identity", c, length=half, name=f"{name}.fuse", component=component))
    return layers
