"""
Throughput, memory and FLOP benchmarking of pool methods
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from harness.model import build_model
from kernels import ops
from kernels.flops import count_flops
from kernels.tensor import GradientTape, backward
from tlp.losses import total_loss
from utils.config import ModelConfig, TlpConfig
from utils.error_handler import ConfigurationError
from utils.performance import PerformanceMonitor

logger = logging.getLogger(__name__)


@dataclass
class BenchReport:
    """Deterministic fields (FLOPs, memory, accuracy) and wall-clock timing kept apart"""
    seed: int
    batch_size: int
    flops: Dict[str, Dict] = field(default_factory=dict)
    memory: Dict[str, int] = field(default_factory=dict)
    tlp_overhead: Dict[str, Dict] = field(default_factory=dict)
    accuracy: Dict[str, Dict] = field(default_factory=dict)
    timing: Dict[str, Dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Everything except timing; identical across runs with the same inputs"""
        return {
            "seed": self.seed,
            "batch_size": self.batch_size,
            "flops": self.flops,
            "memory_bytes": self.memory,
            "tlp_overhead": self.tlp_overhead,
            "accuracy": self.accuracy,
        }

    def timing_dict(self) -> dict:
        return {"seed": self.seed, "batch_size": self.batch_size, "timing": self.timing}


def _key(spec: str, size: int) -> str:
    return f"{spec}@T{size}"


def _train_step(model, signals, labels, rng):
    with GradientTape() as tape:
        out = model.forward(signals, training=True, rng=rng)
        report = total_loss(ops.cross_entropy(out.logits, labels), out.lift_losses)
    backward(tape, report.objective)
    return tape


def accuracy_summary(accuracies: Dict[str, Sequence[float]]) -> Dict[str, Dict]:
    """Mean and population std of per-seed accuracies"""
    return {
        spec: {"mean": float(np.mean(values)), "std": float(np.std(values)), "runs": len(values)}
        for spec, values in accuracies.items() if len(values)
    }


def run_benchmark(pool_specs: Sequence[str], sizes: Sequence[int], repetitions: int = 5, warmup: int = 2,
                  seed: int = 0, batch_size: int = 32, channels: int = 2, classes: int = 4,
                  model_config: Optional[ModelConfig] = None, tlp_config: Optional[TlpConfig] = None,
                  accuracies: Optional[Dict[str, Sequence[float]]] = None, timed: bool = True) -> BenchReport:
    """Analytic FLOPs, recorded activation bytes and median train-step time per (spec, size)"""
    if repetitions < 5 or warmup < 2:
        raise ConfigurationError("benchmark needs at least 5 timed repetitions after 2 warm-ups")
    report = BenchReport(seed=seed, batch_size=batch_size)
    monitor = PerformanceMonitor()

    for size in sizes:
        for spec in pool_specs:
            key = _key(spec, size)
            model = build_model(spec, channels, classes, seed, model_config, tlp_config)
            flops = count_flops(model.describe(size))
            report.flops[key] = {
                "components": flops.components,
                "total_macs": flops.total_macs,
                "total_flops": flops.total_flops,
            }

            data_rng = np.random.default_rng((seed, size))
            signals = data_rng.standard_normal((batch_size, channels, size))
            labels = np.arange(batch_size) % classes
            param_bytes = sum(t.data.nbytes for t in model.named_parameters().values())
            tape = _train_step(model, signals, labels, np.random.default_rng(seed))
            report.memory[key] = param_bytes + tape.activation_bytes()

            if not timed:
                continue
            step_rng = np.random.default_rng(seed)
            for _ in range(warmup):
                _train_step(model, signals, labels, step_rng)
            for _ in range(repetitions):
                monitor.time_call(key, _train_step, model, signals, labels, step_rng)
            median = monitor.get_median(key)
            report.timing[key] = {
                "median_seconds": median,
                "mean_seconds": monitor.get_average(key),
                "repetitions": monitor.count(key),
                "sequences_per_second": batch_size / median if median > 0 else 0.0,
            }
            logger.info(f"bench {key}: {flops.total_flops} FLOPs/sequence, "
                        f"{report.timing[key]['sequences_per_second']:.1f} seq/s")

        _overhead(report, pool_specs, size)

    if accuracies:
        report.accuracy = accuracy_summary(accuracies)
    return report


def _overhead(report: BenchReport, pool_specs: Sequence[str], size: int):
    """FLOPs TLP adds over max pooling at one sequence length"""
    if "tlp" not in pool_specs or "max" not in pool_specs:
        return
    tlp = report.flops[_key("tlp", size)]
    base = report.flops[_key("max", size)]
    added = tlp["total_flops"] - base["total_flops"]
    report.tlp_overhead[f"T{size}"] = {
        "added_flops": added,
        "tlp_component_flops": tlp["components"].get("tlp", 0),
        "relative_to_max": added / base["total_flops"] if base["total_flops"] else 0.0,
        "share_of_tlp_model": added / tlp["total_flops"] if tlp["total_flops"] else 0.0,
    }


def tlp_flop_share(model_config: Optional[ModelConfig] = None, tlp_config: Optional[TlpConfig] = None,
                   length: int = 128, channels: int = 2, classes: int = 4) -> float:
    """Fraction of the TLP model's FLOPs spent inside its TLP layers"""
    model = build_model("tlp", channels, classes, 0, model_config, tlp_config)
    flops = count_flops(model.describe(length))
    return flops.components.get("tlp", 0) / flops.total_flops
