# Pooling package: kernel-2 stride-2 temporal downsamplers

from pooling.baselines import pool_fixed, pool_lp, pool_mixed, pool_soft, pool_stochastic
from pooling.methods import PoolMethod, apply_pool, parse_pool_spec

__all__ = [
    "pool_fixed", "pool_lp", "pool_mixed", "pool_soft", "pool_stochastic",
    "PoolMethod", "apply_pool", "parse_pool_spec",
]
