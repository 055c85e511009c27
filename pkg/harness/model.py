"""
1D sequence classifier with two swappable pooling slots

frame encoder (pointwise convs) -> K5 -> P2 -> K5 -> P2 -> mean over time -> linear
"""

import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from kernels import ops
from kernels.flops import LayerSpec
from kernels.params import ConvParams
from kernels.tensor import Tensor
from pooling.methods import PoolMethod, apply_pool, parse_pool_spec
from tlp.checkpoint import assign_arrays
from tlp.layer import describe_tlp, tlp_forward
from tlp.params import TlpParams, init_tlp_params
from utils.config import ModelConfig, TlpConfig

logger = logging.getLogger(__name__)

TEMPORAL_KERNEL = 5
FALLBACK_POOL = "max"
SLOT_SELECTION = {
    "both": (True, True),
    "first": (True, False),
    "second": (False, True),
    "none": (False, False),
}


@dataclass
class PoolSlot:
    """One downsampling position; tlp is set when the slot runs TLP"""
    method: PoolMethod
    tlp: Optional[TlpParams] = None

    @property
    def spec(self) -> str:
        return self.method.spec

    def out_channels(self, channels: int) -> int:
        return self.tlp.out_channels if self.tlp is not None else channels

    def tensors(self, prefix: str) -> Dict[str, Tensor]:
        if self.tlp is not None:
            return self.tlp.named_tensors(prefix)
        return self.method.tensors(prefix)


@dataclass
class ModelOutput:
    logits: Tensor
    lift_losses: List = field(default_factory=list)


class SequenceModel:
    """Classifier over [N, C, T] signals; the pool slots hold any PoolMethod or a TLP layer"""

    def __init__(self, pool_spec: str, encoder: List[ConvParams], conv1: ConvParams, conv2: ConvParams,
                 slots: List[PoolSlot], head_weight: Tensor, head_bias: Tensor):
        self.pool_spec = pool_spec
        self.encoder = encoder
        self.conv1 = conv1
        self.conv2 = conv2
        self.slots = slots
        self.head_weight = head_weight
        self.head_bias = head_bias

    @property
    def in_channels(self) -> int:
        return self.encoder[0].in_channels if self.encoder else self.conv1.in_channels

    @property
    def classes(self) -> int:
        return self.head_weight.shape[0]

    def named_parameters(self) -> Dict[str, Tensor]:
        named: Dict[str, Tensor] = OrderedDict()
        for i, conv in enumerate(self.encoder):
            named.update(conv.tensors(f"encoder{i}"))
        named.update(self.conv1.tensors("conv1"))
        named.update(self.slots[0].tensors("pool1"))
        named.update(self.conv2.tensors("conv2"))
        named.update(self.slots[1].tensors("pool2"))
        named["head.weight"] = self.head_weight
        named["head.bias"] = self.head_bias
        return named

    def parameter_count(self) -> int:
        return sum(t.size for t in self.named_parameters().values())

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: tensor.data.copy() for name, tensor in self.named_parameters().items()}

    def load_state_dict(self, state: Dict[str, np.ndarray]):
        assign_arrays(self.named_parameters(), state)

    def _pool(self, slot: PoolSlot, h: Tensor, losses: list, rng, training: bool) -> Tensor:
        if slot.tlp is not None:
            out = tlp_forward(h, slot.tlp)
            losses.append((out.c_u, out.c_p))
            return out.y
        return apply_pool(slot.method, h, rng=rng, training=training)

    def forward(self, x, training: bool = False, rng: Optional[np.random.Generator] = None) -> ModelOutput:
        h = ops.to_signal(x)
        for conv in self.encoder:
            h = ops.apply_activation("relu", ops.conv1d(h, conv))
        losses: list = []
        h = ops.apply_activation("relu", ops.conv1d(h, self.conv1))
        h = self._pool(self.slots[0], h, losses, rng, training)
        h = ops.apply_activation("relu", ops.conv1d(h, self.conv2))
        h = self._pool(self.slots[1], h, losses, rng, training)
        logits = ops.linear(ops.mean_time(h), self.head_weight, self.head_bias)
        return ModelOutput(logits=logits, lift_losses=losses)

    def predict(self, x) -> np.ndarray:
        return self.forward(x, training=False).logits.data.argmax(axis=1)

    def describe(self, length: int) -> List[LayerSpec]:
        """Layer list for an input of `length` frames, for FLOP counting"""
        layers: List[LayerSpec] = []
        for i, conv in enumerate(self.encoder):
            layers += [
                LayerSpec("conv", conv.in_channels, conv.out_channels, 1, length=length,
                          name=f"encoder{i}", component="encoder"),
                LayerSpec("activation", conv.out_channels, length=length, name=f"encoder{i}.relu",
                          component="encoder"),
            ]
        t = length
        for index, (conv, slot) in enumerate(((self.conv1, self.slots[0]), (self.conv2, self.slots[1])), 1):
            layers += [
                LayerSpec("conv", conv.in_channels, conv.out_channels, conv.kernel_width, length=t,
                          name=f"conv{index}", component="head"),
                LayerSpec("activation", conv.out_channels, length=t, name=f"conv{index}.relu", component="head"),
            ]
            if slot.tlp is not None:
                layers += describe_tlp(slot.tlp, t, name=f"pool{index}", component="tlp")
            else:
                layers.append(LayerSpec("pool", conv.out_channels, conv.out_channels, 2, length=(t + 1) // 2,
                                        name=f"pool{index}.{slot.spec}", component="pool"))
            t = (t + 1) // 2
        channels = self.head_weight.shape[1]
        layers += [
            LayerSpec("global_avg", channels, length=t, name="mean_time", component="head"),
            LayerSpec("linear", channels, self.classes, name="head", component="head"),
        ]
        return layers


def _slot(spec: str, selected: bool, channels: int, tlp_config: TlpConfig, rng) -> PoolSlot:
    method = parse_pool_spec(spec if selected else FALLBACK_POOL)
    if method.kind == "tlp":
        return PoolSlot(method=method, tlp=init_tlp_params(channels, tlp_config, rng))
    return PoolSlot(method=method)


def build_model(pool_spec: str, channels: int, classes: int, seed: int,
                model_config: Optional[ModelConfig] = None,
                tlp_config: Optional[TlpConfig] = None) -> SequenceModel:
    """Seeded model; pool slots not selected by model_config.locations keep max pooling"""
    model_config = model_config or ModelConfig()
    tlp_config = tlp_config or TlpConfig()
    parse_pool_spec(pool_spec)
    rng = np.random.default_rng(seed)
    hidden = model_config.hidden_channels

    encoder = []
    width = channels
    for out in list(model_config.encoder_widths) + [hidden]:
        encoder.append(ConvParams.initialize(width, out, 1, rng=rng))
        width = out

    first, second = SLOT_SELECTION[model_config.locations]
    conv1 = ConvParams.initialize(hidden, hidden, TEMPORAL_KERNEL, rng=rng)
    slot1 = _slot(pool_spec, first, hidden, tlp_config, rng)
    conv2 = ConvParams.initialize(slot1.out_channels(hidden), hidden, TEMPORAL_KERNEL, rng=rng)
    slot2 = _slot(pool_spec, second, hidden, tlp_config, rng)
    features = slot2.out_channels(hidden)

    bound = 1.0 / np.sqrt(features)
    head_weight = Tensor(rng.uniform(-bound, bound, size=(classes, features)), requires_grad=True)
    head_bias = Tensor(np.zeros(classes), requires_grad=True)

    model = SequenceModel(pool_spec, encoder, conv1, conv2, [slot1, slot2], head_weight, head_bias)
    logger.info(f"Built model: pool={pool_spec}, locations={model_config.locations}, "
                f"parameters={model.parameter_count()}")
    return model
