"""
Finite-difference gradient oracle
"""

import logging
from typing import Callable, Dict

import numpy as np

from kernels.tensor import GradientTape, Tensor, backward
from utils.error_handler import ConfigurationError

logger = logging.getLogger(__name__)


def finite_diff_grad(fn: Callable[[np.ndarray], float], x, eps: float = 1e-6) -> np.ndarray:
    """Central differences (fn(x + eps e_i) - fn(x - eps e_i)) / (2 eps) for every coordinate"""
    if eps <= 0:
        raise ConfigurationError(f"finite-difference step must be positive, got {eps}")
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for i in range(x.size):
        plus = x.copy()
        plus.flat[i] += eps
        minus = x.copy()
        minus.flat[i] -= eps
        grad.flat[i] = (float(fn(plus)) - float(fn(minus))) / (2.0 * eps)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-3) -> float:
    """||a - n|| / max(||a||, ||n||, floor)"""
    diff = np.linalg.norm(np.asarray(analytic) - np.asarray(numeric))
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), floor)
    return float(diff / scale)


def check_gradients(loss_fn: Callable[[], Tensor], tensors: Dict[str, Tensor],
                    eps: float = 1e-6) -> Dict[str, float]:
    """Compare taped gradients of loss_fn() with central differences, per named tensor.

    loss_fn must read the current values of the given tensors and return a scalar Tensor.
    """
    for tensor in tensors.values():
        tensor.requires_grad = True
    with GradientTape() as tape:
        loss = loss_fn()
    grads = backward(tape, loss)

    errors = {}
    for name, tensor in tensors.items():
        original = tensor.data

        def scalar(values, tensor=tensor):
            tensor.data = values
            return float(loss_fn().data)

        try:
            numeric = finite_diff_grad(scalar, original, eps)
        finally:
            tensor.data = original
        errors[name] = relative_error(grads[tensor], numeric)
        logger.debug(f"gradcheck {name}: rel. err {errors[name]:.3e}")
    return errors
