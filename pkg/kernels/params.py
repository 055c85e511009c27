"""
Convolution parameter sets and their initialization
"""

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from kernels.tensor import Tensor
from utils.error_handler import ConfigurationError, ShapeError


@dataclass
class ConvParams:
    """Weights [out, in/groups, k] and bias [out] of a grouped 1D convolution"""
    weight: Tensor
    bias: Tensor
    groups: int = 1

    def __post_init__(self):
        if self.weight.ndim != 3:
            raise ShapeError(f"conv weight must be [out, in/groups, k], got shape {self.weight.shape}")
        if self.groups < 1:
            raise ConfigurationError(f"groups must be positive, got {self.groups}")
        if self.kernel_width < 1:
            raise ConfigurationError("kernel width must be at least 1")
        if self.out_channels % self.groups:
            raise ShapeError(f"out-channels {self.out_channels} not divisible by groups {self.groups}")
        if self.bias.shape != (self.out_channels,):
            raise ShapeError(f"conv bias must have shape ({self.out_channels},), got {self.bias.shape}")

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1] * self.groups

    @property
    def kernel_width(self) -> int:
        return self.weight.shape[2]

    @classmethod
    def initialize(cls, in_channels: int, out_channels: int, kernel_width: int, groups: int = 1,
                   rng: Optional[np.random.Generator] = None, zero: bool = False) -> "ConvParams":
        """Uniform ±1/sqrt(fan_in) weights and zero bias, or all zeros"""
        if in_channels % groups or out_channels % groups:
            raise ShapeError(f"channels ({in_channels} -> {out_channels}) not divisible by groups {groups}")
        shape = (out_channels, in_channels // groups, kernel_width)
        if zero:
            weight = np.zeros(shape)
        else:
            if rng is None:
                raise ConfigurationError("a random generator is required for non-zero initialization")
            bound = 1.0 / np.sqrt((in_channels // groups) * kernel_width)
            weight = rng.uniform(-bound, bound, size=shape)
        return cls(
            weight=Tensor(weight, requires_grad=True),
            bias=Tensor(np.zeros(out_channels), requires_grad=True),
            groups=groups,
        )

    def tensors(self, prefix: str) -> Dict[str, Tensor]:
        return {f"{prefix}.weight": self.weight, f"{prefix}.bias": self.bias}

    def parameter_count(self) -> int:
        return self.weight.size + self.bias.size
