# Kernels package: tensors, tape, layers, optimizer, gradient oracle, FLOP counter

from kernels.tensor import GradientTape, Gradients, Tensor, as_tensor, backward
from kernels.params import ConvParams
from kernels.ops import apply_activation, conv1d, normalize, to_signal
from kernels.optim import AdamState, adam_step
from kernels.gradcheck import check_gradients, finite_diff_grad, relative_error
from kernels.flops import FlopReport, LayerSpec, count_flops

__all__ = [
    "GradientTape", "Gradients", "Tensor", "as_tensor", "backward",
    "ConvParams",
    "apply_activation", "conv1d", "normalize", "to_signal",
    "AdamState", "adam_step",
    "check_gradients", "finite_diff_grad", "relative_error",
    "FlopReport", "LayerSpec", "count_flops",
]
