"""
Adam with decoupled weight decay
"""

import logging
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from kernels.tensor import Tensor
from utils.error_handler import ConfigurationError, ShapeError

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """Per-parameter moments, step counter and hyperparameters"""
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-3
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: Dict[str, Tensor], grads: Dict[str, np.ndarray], state: AdamState) -> AdamState:
    """One bias-corrected Adam update with decoupled weight decay.

    p <- p * (1 - lr * wd)
    p <- p - lr / (1 - b1^t) * m / (sqrt(v) / sqrt(1 - b2^t) + eps)

    Parameter tensors receive new arrays; arrays held elsewhere are left untouched.
    """
    if state.lr < 0:
        raise ConfigurationError(f"learning rate must be non-negative, got {state.lr}")
    for name, tensor in params.items():
        if name not in grads:
            raise ShapeError(f"no gradient for parameter {name!r}")
        if grads[name].shape != tensor.shape:
            raise ShapeError(f"gradient shape {grads[name].shape} does not match parameter {name!r} {tensor.shape}")

    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    step_size = state.lr / bc1
    decay = 1.0 - state.lr * state.weight_decay

    for name, tensor in params.items():
        g = grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(tensor.data)
            state.v[name] = np.zeros_like(tensor.data)

        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * (g * g)

        denom = np.sqrt(state.v[name]) / np.sqrt(bc2) + state.eps
        tensor.data = tensor.data * decay - step_size * state.m[name] / denom

    return state
