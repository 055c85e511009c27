"""
Pool method selection by spec string
"max", "avg", "lp:<p>", "lp", "mixed", "stochastic", "soft", "tlp"
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from kernels.tensor import Tensor
from pooling.baselines import pool_fixed, pool_lp, pool_mixed, pool_soft, pool_stochastic
from utils.error_handler import ConfigurationError, UsageError

logger = logging.getLogger(__name__)

POOL_KINDS = ("max", "average", "lp", "mixed", "stochastic", "soft", "tlp")
SPEC_NAMES = ("max", "avg", "lp:<p>", "mixed", "stochastic", "soft", "tlp")
DEFAULT_LP_EXPONENT = 2.0


@dataclass
class PoolMethod:
    """One configured downsampler; blend is the learnable logit of mixed pooling"""
    kind: str
    p: float = DEFAULT_LP_EXPONENT
    blend: Optional[Tensor] = None
    spec: str = ""

    def __post_init__(self):
        if self.kind not in POOL_KINDS:
            raise ConfigurationError(f"unknown pool kind {self.kind!r}; expected one of {POOL_KINDS}")
        if self.kind == "lp" and (not np.isfinite(self.p) or self.p < 1):
            raise ConfigurationError(f"Lp exponent must be finite and >= 1, got {self.p}")
        if self.kind == "mixed" and self.blend is None:
            self.blend = Tensor(np.zeros(()), requires_grad=True, name="blend")

    @property
    def learnable(self) -> bool:
        return self.kind in ("mixed", "tlp")

    def tensors(self, prefix: str) -> Dict[str, Tensor]:
        if self.kind == "mixed":
            return {f"{prefix}.blend": self.blend}
        return {}


def parse_pool_spec(spec: str) -> PoolMethod:
    """Build a PoolMethod from its spec string"""
    if not isinstance(spec, str) or not spec.strip():
        raise ConfigurationError("pool spec must be a non-empty string")
    text = spec.strip().lower()

    if text in ("avg", "average"):
        return PoolMethod(kind="average", spec="avg")
    if text in ("max", "mixed", "stochastic", "soft", "tlp"):
        return PoolMethod(kind=text, spec=text)
    if text == "lp":
        return PoolMethod(kind="lp", p=DEFAULT_LP_EXPONENT, spec=f"lp:{DEFAULT_LP_EXPONENT:g}")
    if text.startswith("lp:"):
        try:
            p = float(text[3:])
        except ValueError as e:
            raise ConfigurationError(f"invalid Lp exponent in pool spec {spec!r}") from e
        return PoolMethod(kind="lp", p=p, spec=f"lp:{p:g}")

    raise ConfigurationError(f"unknown pool spec {spec!r}; expected one of {SPEC_NAMES}")


def apply_pool(method: PoolMethod, x, rng: Optional[np.random.Generator] = None,
               training: bool = False) -> Tensor:
    """Run a parameter-free or mixed pool; stochastic pooling samples only when training"""
    if method.kind in ("max", "average"):
        return pool_fixed(method.kind, x)
    if method.kind == "lp":
        return pool_lp(x, method.p)
    if method.kind == "mixed":
        return pool_mixed(x, method.blend)
    if method.kind == "stochastic":
        return pool_stochastic(x, rng, "train" if training else "eval")
    if method.kind == "soft":
        return pool_soft(x)
    raise UsageError("TLP slots carry their own parameters; run them through tlp.layer.tlp_forward")
