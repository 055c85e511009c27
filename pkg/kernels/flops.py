"""
Analytic FLOP counting
1 multiply-accumulate (MAC) = 2 FLOPs
"""

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List

from utils.error_handler import ConfigurationError

# Per-element kinds cost 1 FLOP per output element and no MACs.
ELEMENTWISE_KINDS = ("activation", "norm", "elementwise")
# Window selection/averaging of the parameter-free pools is not counted.
FREE_KINDS = ("pool", "identity")
LAYER_KINDS = ("conv", "linear", "global_avg") + ELEMENTWISE_KINDS + FREE_KINDS


@dataclass(frozen=True)
class LayerSpec:
    """One layer of a model description; length is the output sequence length"""
    kind: str
    channels_in: int
    channels_out: int = 0
    kernel: int = 1
    groups: int = 1
    length: int = 1
    name: str = ""
    component: str = "model"


@dataclass(frozen=True)
class LayerCount:
    name: str
    component: str
    macs: int
    flops: int


@dataclass
class FlopReport:
    layers: List[LayerCount] = field(default_factory=list)

    @property
    def components(self) -> Dict[str, int]:
        totals: Dict[str, int] = OrderedDict()
        for layer in self.layers:
            totals[layer.component] = totals.get(layer.component, 0) + layer.flops
        return dict(totals)

    @property
    def total_macs(self) -> int:
        return sum(layer.macs for layer in self.layers)

    @property
    def total_flops(self) -> int:
        return sum(layer.flops for layer in self.layers)

    def to_dict(self) -> dict:
        return {
            "layers": [
                {"name": l.name, "component": l.component, "macs": l.macs, "flops": l.flops}
                for l in self.layers
            ],
            "components": self.components,
            "total_macs": self.total_macs,
            "total_flops": self.total_flops,
        }


def layer_macs_flops(spec: LayerSpec):
    """(MACs, FLOPs) of a single layer"""
    if spec.kind == "conv":
        if spec.channels_in % spec.groups:
            raise ConfigurationError(f"layer {spec.name!r}: channels_in not divisible by groups")
        macs = spec.kernel * (spec.channels_in // spec.groups) * spec.channels_out * spec.length
        return macs, 2 * macs
    if spec.kind == "linear":
        macs = spec.channels_in * spec.channels_out
        return macs, 2 * macs
    if spec.kind == "global_avg":
        return 0, spec.channels_in * spec.length
    if spec.kind in ELEMENTWISE_KINDS:
        return 0, spec.channels_in * spec.length
    if spec.kind in FREE_KINDS:
        return 0, 0
    raise ConfigurationError(f"unknown layer kind {spec.kind!r}; expected one of {LAYER_KINDS}")


def count_flops(layers: Iterable[LayerSpec]) -> FlopReport:
    """Per-layer and per-component counts for a sequential model description.

    For global_avg, length is the input length being averaged.
    """
    report = FlopReport()
    for index, spec in enumerate(layers):
        macs, flops = layer_macs_flops(spec)
        report.layers.append(LayerCount(
            name=spec.name or f"{spec.kind}{index}",
            component=spec.component,
            macs=macs,
            flops=flops,
        ))
    return report
