"""
Finite-difference gradient suite over every differentiable op and the full TLP objective
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Tuple

import numpy as np
from tqdm import tqdm

from kernels import ops
from kernels.gradcheck import check_gradients
from kernels.params import ConvParams
from kernels.tensor import Tensor
from pooling.baselines import pool_fixed, pool_lp, pool_mixed, pool_soft, pool_stochastic
from tlp.fusion import fuse
from tlp.layer import tlp_forward
from tlp.lifting import predict, update
from tlp.losses import total_loss
from tlp.params import init_tlp_params, randomize_params
from tlp.weighting import component_weight
from utils.config import TlpConfig
from utils.error_handler import ConfigurationError
from utils.performance import measure_time

logger = logging.getLogger(__name__)

OP_TOLERANCE = 1e-5
COMPOSITION_TOLERANCE = 1e-4

Check = Callable[[np.random.Generator], Tuple[Callable[[], Tensor], Dict[str, Tensor], float]]


@dataclass
class GradcheckResult:
    check: str
    seed: int
    tensor: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.error < self.tolerance


@dataclass
class GradcheckReport:
    results: List[GradcheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.results) and all(r.passed for r in self.results)

    @property
    def failures(self) -> List[GradcheckResult]:
        return [r for r in self.results if not r.passed]

    def worst(self) -> Dict[str, float]:
        """Largest relative error per check"""
        worst: Dict[str, float] = {}
        for r in self.results:
            worst[r.check] = max(worst.get(r.check, 0.0), r.error)
        return worst


def _leaf(rng, *shape, name="") -> Tensor:
    return Tensor(rng.standard_normal(shape), requires_grad=True, name=name)


def _probe(y: Tensor, weights: np.ndarray) -> Tensor:
    """Scalar <y, weights> with fixed random weights"""
    return ops.total(ops.mul(y, weights))


def _conv(rng, c_in, c_out, k, groups=1) -> ConvParams:
    p = ConvParams.initialize(c_in, c_out, k, groups=groups, rng=rng)
    p.bias.data = rng.standard_normal(c_out)
    return p


def _unary(fn, out_length: int = 6):
    def check(rng):
        x = _leaf(rng, 2, 3, 6, name="x")
        r = rng.standard_normal((2, 3, out_length))
        return (lambda: _probe(fn(x), r)), {"x": x}, OP_TOLERANCE
    return check


def check_conv(rng, groups=1):
    x = _leaf(rng, 2, 4, 7, name="x")
    p = _conv(rng, 4, 4, 3, groups)
    r = rng.standard_normal((2, 4, 7))
    return (lambda: _probe(ops.conv1d(x, p), r)), {"x": x, "weight": p.weight, "bias": p.bias}, OP_TOLERANCE


def check_normalize(rng, kind):
    x = _leaf(rng, 3, 2, 6, name="x")
    scale, shift = _leaf(rng, 2), _leaf(rng, 2)
    r = rng.standard_normal((3, 2, 6))
    return (lambda: _probe(ops.normalize(kind, x, scale, shift), r)), \
        {"x": x, "scale": scale, "shift": shift}, OP_TOLERANCE


def check_linear_ce(rng):
    x = _leaf(rng, 5, 3, name="x")
    w, b = _leaf(rng, 4, 3), _leaf(rng, 4)
    labels = rng.integers(0, 4, size=5)
    return (lambda: ops.cross_entropy(ops.linear(x, w, b), labels)), {"x": x, "weight": w, "bias": b}, OP_TOLERANCE


def check_mixed(rng):
    x = _leaf(rng, 2, 3, 6, name="x")
    blend = Tensor(rng.standard_normal(()), requires_grad=True)
    r = rng.standard_normal((2, 3, 3))
    return (lambda: _probe(pool_mixed(x, blend), r)), {"x": x, "blend": blend}, OP_TOLERANCE


def _tlp_params(rng, config: TlpConfig, channels=3):
    return randomize_params(init_tlp_params(channels, config, rng), rng)


def check_lift_net(rng, which):
    params = _tlp_params(rng, TlpConfig())
    net = params.predictor if which == "predict" else params.updater
    fn = predict if which == "predict" else update
    x = _leaf(rng, 2, 3, 5, name="x")
    r = rng.standard_normal((2, 3, 5))
    tensors = {"x": x, **net.tensors(which)}
    return (lambda: _probe(fn(x, net), r)), tensors, OP_TOLERANCE


def check_component_weight(rng):
    params = _tlp_params(rng, TlpConfig())
    x = _leaf(rng, 2, 3, 6, name="x")
    r = rng.standard_normal((2, 3, 6))
    tensors = {"x": x, **params.weight_s.tensors("weight_s")}
    return (lambda: _probe(component_weight(x, params.weight_s), r)), tensors, OP_TOLERANCE


def check_bottleneck(rng):
    params = _tlp_params(rng, TlpConfig(fusion="bottleneck"))
    s, d = _leaf(rng, 3, 3, 5, name="s"), _leaf(rng, 3, 3, 5, name="d")
    r = rng.standard_normal((3, 3, 5))
    tensors = {"s": s, "d": d, **params.fusion_net.tensors("fusion")}
    return (lambda: _probe(fuse("bottleneck", s, d, params.fusion_net), r)), tensors, OP_TOLERANCE


def check_tlp_objective(rng, fusion="sum"):
    params = _tlp_params(rng, TlpConfig(fusion=fusion))
    x = _leaf(rng, 2, 3, 10, name="x")
    r = rng.standard_normal((2, params.out_channels, 5))

    def loss():
        out = tlp_forward(x, params)
        return total_loss(_probe(out.y, r), [(out.c_u, out.c_p)]).objective

    return loss, {"x": x, **params.named_tensors()}, COMPOSITION_TOLERANCE


CHECKS: Dict[str, Check] = {
    "conv1d": check_conv,
    "conv1d_depthwise": lambda rng: check_conv(rng, groups=4),
    "relu": _unary(lambda x: ops.apply_activation("relu", x)),
    "tanh": _unary(lambda x: ops.apply_activation("tanh", x)),
    "sigmoid": _unary(lambda x: ops.apply_activation("sigmoid", x)),
    "instance_norm": lambda rng: check_normalize(rng, "instance"),
    "batch_norm": lambda rng: check_normalize(rng, "batch"),
    "linear_cross_entropy": check_linear_ce,
    "max_pool": _unary(lambda x: pool_fixed("max", x), 3),
    "avg_pool": _unary(lambda x: pool_fixed("average", x), 3),
    "lp_pool": _unary(lambda x: pool_lp(x, 3.0), 3),
    "soft_pool": _unary(pool_soft, 3),
    "stochastic_pool_eval": _unary(lambda x: pool_stochastic(x, mode="eval"), 3),
    "mixed_pool": check_mixed,
    "predict": lambda rng: check_lift_net(rng, "predict"),
    "update": lambda rng: check_lift_net(rng, "update"),
    "component_weight": check_component_weight,
    "bottleneck_fusion": check_bottleneck,
    "tlp_objective": check_tlp_objective,
    "tlp_objective_concat": lambda rng: check_tlp_objective(rng, "concat"),
}


@measure_time
def run_gradcheck_suite(seeds: Iterable[int] = range(20), checks: Iterable[str] = None,
                        eps: float = 1e-6, progress: bool = False) -> GradcheckReport:
    report = GradcheckReport()
    names = list(checks or CHECKS)
    unknown = [name for name in names if name not in CHECKS]
    if unknown:
        raise ConfigurationError(f"unknown gradient checks: {unknown}; expected some of {list(CHECKS)}")
    seeds = list(seeds)
    for name in tqdm(names, desc="gradcheck", disable=not progress, leave=False):
        for seed in seeds:
            rng = np.random.default_rng((seed, list(CHECKS).index(name)))
            loss_fn, tensors, tolerance = CHECKS[name](rng)
            for tensor_name, error in check_gradients(loss_fn, tensors, eps).items():
                report.results.append(GradcheckResult(name, seed, tensor_name, error, tolerance))
        logger.info(f"gradcheck {name}: worst rel. err {report.worst().get(name, 0.0):.2e}")
    return report
