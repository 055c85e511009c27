"""
Lifting regularizers and the combined training objective

c_u = mean((s - x_o)^2)    pulls the approximation towards the odd frames
c_p = mean(d^2)            keeps the difference signal small
total = task + alpha_u * sum(c_u) + alpha_p * sum(c_p)    summed over TLP layers
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

from kernels import ops
from kernels.tensor import Tensor, as_tensor
from utils.error_handler import ConfigurationError, ShapeError

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.001


def lift_losses(s, d, x_o) -> Tuple[Tensor, Tensor]:
    s, d, x_o = as_tensor(s), as_tensor(d), as_tensor(x_o)
    if not (s.shape == d.shape == x_o.shape):
        raise ShapeError(f"loss inputs disagree: s {s.shape}, d {d.shape}, x_o {x_o.shape}")
    c_u = ops.mean(ops.square(ops.sub(s, x_o)))
    c_p = ops.mean(ops.square(d))
    return c_u, c_p


@dataclass
class LossReport:
    """Values of one optimization step; `objective` is the differentiable total"""
    task_loss: float
    c_u: float
    c_p: float
    total: float
    alpha_u: float
    alpha_p: float
    objective: Tensor = field(repr=False, compare=False, default=None)

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.task_loss, self.c_u, self.c_p, self.total))

    def to_dict(self) -> dict:
        return {
            "task_loss": self.task_loss,
            "c_u": self.c_u,
            "c_p": self.c_p,
            "total": self.total,
            "alpha_u": self.alpha_u,
            "alpha_p": self.alpha_p,
        }


def total_loss(task_loss: Union[Tensor, float], layer_losses: Sequence[Tuple[Tensor, Tensor]],
               alpha_u: float = DEFAULT_ALPHA, alpha_p: float = DEFAULT_ALPHA) -> LossReport:
    if alpha_u < 0 or alpha_p < 0:
        raise ConfigurationError(f"loss coefficients must be non-negative, got alpha_u={alpha_u}, alpha_p={alpha_p}")
    task = as_tensor(task_loss)

    sum_u: List[Tensor] = [c_u for c_u, _ in layer_losses]
    sum_p: List[Tensor] = [c_p for _, c_p in layer_losses]
    objective = task
    c_u_value = c_p_value = 0.0
    if layer_losses:
        total_u, total_p = sum_u[0], sum_p[0]
        for c_u, c_p in zip(sum_u[1:], sum_p[1:]):
            total_u = ops.add(total_u, c_u)
            total_p = ops.add(total_p, c_p)
        objective = ops.add(ops.add(task, ops.mul(total_u, alpha_u)), ops.mul(total_p, alpha_p))
        c_u_value, c_p_value = float(total_u.data), float(total_p.data)

    return LossReport(
        task_loss=float(task.data),
        c_u=c_u_value,
        c_p=c_p_value,
        total=float(objective.data),
        alpha_u=alpha_u,
        alpha_p=alpha_p,
        objective=objective,
    )
