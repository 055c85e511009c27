"""
Learnable parameter sets of a TLP layer
Predictor/updater nets, component-weighting nets and the fusion bottleneck
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from kernels.params import ConvParams
from kernels.tensor import Tensor
from utils.config import TlpConfig
from utils.error_handler import ConfigurationError

logger = logging.getLogger(__name__)


def _affine(channels: int, prefix: str):
    return (
        Tensor(np.ones(channels), requires_grad=True, name=f"{prefix}.scale"),
        Tensor(np.zeros(channels), requires_grad=True, name=f"{prefix}.shift"),
    )


@dataclass
class LiftNetParams:
    """Predictor or updater net.

    depthwise arch: Tanh . Conv(k=1) . ReLU . Conv(k=K, groups=C)
    plain arch:     Tanh . Conv(k=K)   (depthwise is None)
    """
    projection: ConvParams
    depthwise: Optional[ConvParams] = None

    @property
    def channels(self) -> int:
        return self.projection.out_channels

    def tensors(self, prefix: str) -> Dict[str, Tensor]:
        named = {}
        if self.depthwise is not None:
            named.update(self.depthwise.tensors(f"{prefix}.depthwise"))
        named.update(self.projection.tensors(f"{prefix}.projection"))
        return named


@dataclass
class WeightNetParams:
    """Sigmoid . Norm . Conv(k) producing the weight matrix W"""
    conv: ConvParams
    scale: Tensor
    shift: Tensor
    norm: str = "instance"

    def tensors(self, prefix: str) -> Dict[str, Tensor]:
        named = self.conv.tensors(f"{prefix}.conv")
        named[f"{prefix}.scale"] = self.scale
        named[f"{prefix}.shift"] = self.shift
        return named


@dataclass
class FusionParams:
    """ReLU . BN . Conv(k=1) over the concatenated sub-bands (2C -> C)"""
    conv: ConvParams
    scale: Tensor
    shift: Tensor

    def tensors(self, prefix: str) -> Dict[str, Tensor]:
        named = self.conv.tensors(f"{prefix}.conv")
        named[f"{prefix}.scale"] = self.scale
        named[f"{prefix}.shift"] = self.shift
        return named


@dataclass
class TlpParams:
    """Everything one TLP layer learns, plus the structural options it was built with.

    weight_s and weight_d are the same object in shared weighting mode and both
    None when weighting is disabled.
    """
    channels: int
    predictor: LiftNetParams
    updater: LiftNetParams
    weight_s: Optional[WeightNetParams]
    weight_d: Optional[WeightNetParams]
    fusion_net: Optional[FusionParams]
    config: TlpConfig

    @property
    def kernel_size(self) -> int:
        return self.config.kernel_size

    @property
    def fusion(self) -> str:
        return self.config.fusion

    @property
    def out_channels(self) -> int:
        return 2 * self.channels if self.fusion == "concat" else self.channels

    def named_tensors(self, prefix: str = "") -> Dict[str, Tensor]:
        """Parameter tensors by dotted name; a shared weighting net is listed once"""
        lead = f"{prefix}." if prefix else ""
        named = {}
        named.update(self.predictor.tensors(f"{lead}predictor"))
        named.update(self.updater.tensors(f"{lead}updater"))
        if self.weight_s is not None:
            if self.weight_s is self.weight_d:
                named.update(self.weight_s.tensors(f"{lead}weight_shared"))
            else:
                named.update(self.weight_s.tensors(f"{lead}weight_s"))
                named.update(self.weight_d.tensors(f"{lead}weight_d"))
        if self.fusion_net is not None:
            named.update(self.fusion_net.tensors(f"{lead}fusion"))
        return named

    def parameter_count(self) -> int:
        return sum(t.size for t in self.named_tensors().values())


def init_lift_net(channels: int, config: TlpConfig, rng: np.random.Generator) -> LiftNetParams:
    """Uniform depthwise conv; the final conv and every bias start at zero so the net outputs 0"""
    k = config.kernel_size
    if config.predictor_arch == "plain":
        return LiftNetParams(projection=ConvParams.initialize(channels, channels, k, zero=True))
    return LiftNetParams(
        depthwise=ConvParams.initialize(channels, channels, k, groups=channels, rng=rng),
        projection=ConvParams.initialize(channels, channels, 1, zero=True),
    )


def init_weight_net(channels: int, config: TlpConfig, prefix: str) -> WeightNetParams:
    """Zero conv with an identity affine, so W starts at exactly 0.5"""
    scale, shift = _affine(channels, prefix)
    return WeightNetParams(
        conv=ConvParams.initialize(channels, channels, config.weighting_kernel, zero=True),
        scale=scale,
        shift=shift,
        norm=config.weighting_norm,
    )


def init_tlp_params(channels: int, config: Optional[TlpConfig] = None,
                    rng: Optional[np.random.Generator] = None) -> TlpParams:
    """Build a TLP layer for `channels` input channels"""
    config = config or TlpConfig()
    if channels < 1:
        raise ConfigurationError(f"TLP needs at least one channel, got {channels}")
    if rng is None:
        rng = np.random.default_rng(0)

    predictor = init_lift_net(channels, config, rng)
    updater = init_lift_net(channels, config, rng)

    weight_s = weight_d = None
    if config.weighting_mode == "independent":
        weight_s = init_weight_net(channels, config, "weight_s")
        weight_d = init_weight_net(channels, config, "weight_d")
    elif config.weighting_mode == "shared":
        weight_s = weight_d = init_weight_net(channels, config, "weight_shared")

    fusion_net = None
    if config.fusion == "bottleneck":
        scale, shift = _affine(channels, "fusion")
        fusion_net = FusionParams(
            conv=ConvParams.initialize(2 * channels, channels, 1, rng=rng),
            scale=scale,
            shift=shift,
        )

    params = TlpParams(
        channels=channels,
        predictor=predictor,
        updater=updater,
        weight_s=weight_s,
        weight_d=weight_d,
        fusion_net=fusion_net,
        config=config,
    )
    logger.debug(f"TLP layer: C={channels}, K={config.kernel_size}, fusion={config.fusion}, "
                 f"{params.parameter_count()} parameters")
    return params


def randomize_params(params: TlpParams, rng: np.random.Generator, scale: float = 0.5) -> TlpParams:
    """Overwrite every tensor with N(0, scale^2) draws, in place; affine scales stay near 1"""
    for name, tensor in params.named_tensors().items():
        noise = rng.normal(0.0, scale, size=tensor.shape)
        tensor.data = 1.0 + noise if name.endswith(".scale") else noise
    return params
