"""
Wall-clock timing for benchmarks and long harness calls
"""

import functools
import logging
import time
from collections import defaultdict
from typing import Callable, Dict, List

import numpy as np

logger = logging.getLogger(__name__)


def measure_time(func: Callable) -> Callable:
    """Log the duration of every call at DEBUG"""
    @functools.wraps(func)
    def timed(*args, **kwargs):
        started = time.perf_counter()
        try:
            return func(*args, **kwargs)
        finally:
            logger.debug(f"{func.__qualname__} finished in {time.perf_counter() - started:.3f}s")
    return timed


class PerformanceMonitor:
    """Timing samples keyed by name (one key per pool spec and sequence length in the benchmark)"""

    def __init__(self):
        self.samples: Dict[str, List[float]] = defaultdict(list)

    def record_metric(self, name: str, seconds: float):
        self.samples[name].append(float(seconds))

    def time_call(self, name: str, func: Callable, *args, **kwargs):
        """Call func once, store its duration under name and pass its result through"""
        started = time.perf_counter()
        result = func(*args, **kwargs)
        self.record_metric(name, time.perf_counter() - started)
        return result

    def count(self, name: str) -> int:
        return len(self.samples.get(name, ()))

    def get_average(self, name: str) -> float:
        values = self.samples.get(name)
        return float(np.mean(values)) if values else 0.0

    def get_median(self, name: str) -> float:
        values = self.samples.get(name)
        return float(np.median(values)) if values else 0.0
