"""
Experiment queue for pool-method comparisons
Runs (pool spec, seed) experiments on a bounded thread pool
"""

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from harness.datasets import SyntheticDataset, gen_dataset
from harness.model import build_model
from harness.training import evaluate, train
from utils.config import AppConfig
from utils.error_handler import UsageError
from utils.performance import measure_time

logger = logging.getLogger(__name__)


@dataclass
class Experiment:
    """One queued comparison run"""
    pool_spec: str
    seed: int
    timestamp: float = 0.0

    @property
    def id(self) -> str:
        return f"{self.pool_spec}@seed{self.seed}"


@dataclass
class ExperimentResult:
    id: str
    pool_spec: str
    seed: int
    test_acc: float
    dev_acc: float
    final_task_loss: float
    parameters: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class DataSplits:
    train: SyntheticDataset
    dev: SyntheticDataset
    test: SyntheticDataset


@dataclass
class RankedRow:
    rank: int
    pool_spec: str
    mean_acc: float
    std_acc: float
    runs: int


class ExperimentQueue:
    """Pending, running and finished experiments behind one lock"""

    def __init__(self, max_size: int = 1024):
        self.max_size = max_size
        self.pending: List[Experiment] = []
        self.running: Dict[str, Experiment] = {}
        self.results: Dict[str, ExperimentResult] = {}
        self.lock = threading.Lock()

    def add(self, pool_spec: str, seed: int) -> Tuple[bool, Optional[str], int]:
        """
        Queue an experiment

        Returns:
            (success, error_message, position)
        """
        with self.lock:
            experiment = Experiment(pool_spec=pool_spec, seed=seed, timestamp=time.time())

            if len(self.pending) >= self.max_size:
                return False, f"Queue is full (max {self.max_size}).", -1

            if any(e.id == experiment.id for e in self.pending) or experiment.id in self.running \
                    or experiment.id in self.results:
                return False, f"Experiment {experiment.id} is already queued.", -1

            self.pending.append(experiment)
            position = len(self.pending)
            logger.info(f"Queued experiment: {experiment.id}, position={position}")
            return True, None, position

    def get_next(self) -> Optional[Experiment]:
        with self.lock:
            if not self.pending:
                return None
            experiment = self.pending.pop(0)
            self.running[experiment.id] = experiment
            logger.info(f"Running experiment: {experiment.id}")
            return experiment

    def complete(self, result: ExperimentResult):
        with self.lock:
            self.running.pop(result.id, None)
            self.results[result.id] = result
            logger.info(f"Completed experiment: {result.id}, test_acc={result.test_acc:.3f}")

    def fail(self, experiment: Experiment):
        with self.lock:
            self.running.pop(experiment.id, None)
            logger.error(f"Experiment failed: {experiment.id}")

    def get_queue_info(self) -> Dict:
        with self.lock:
            return {
                "pending": len(self.pending),
                "running": len(self.running),
                "finished": len(self.results),
                "max_size": self.max_size,
            }


def make_splits(config: AppConfig, seed: int) -> DataSplits:
    ds = config.dataset
    common = dict(length=ds.length, channels=ds.channels, noise=ds.noise)
    return DataSplits(
        train=gen_dataset(ds.task, seed, ds.train_size, "train", **common),
        dev=gen_dataset(ds.task, seed, ds.dev_size, "dev", **common),
        test=gen_dataset(ds.task, seed, ds.test_size, "test", **common),
    )


def run_experiment(experiment: Experiment, splits: DataSplits, config: AppConfig,
                   progress: bool = False) -> ExperimentResult:
    """Build, train and test one model; dataset, init and training all use the experiment seed"""
    model = build_model(experiment.pool_spec, splits.train.channels, config.model.classes, experiment.seed,
                        config.model, config.tlp)
    result = train(model, splits.train, config.training, seed=experiment.seed, dev=splits.dev, progress=progress)
    final = result.final
    return ExperimentResult(
        id=experiment.id,
        pool_spec=experiment.pool_spec,
        seed=experiment.seed,
        test_acc=evaluate(model, splits.test),
        dev_acc=final.dev_acc if final else float("nan"),
        final_task_loss=final.task_loss if final else float("nan"),
        parameters=model.parameter_count(),
    )


@measure_time
def run_comparison(config: AppConfig, pool_specs: Optional[Sequence[str]] = None,
                   seeds: Optional[Sequence[int]] = None, threads: Optional[int] = None,
                   runner: Callable[[Experiment, DataSplits, AppConfig], ExperimentResult] = run_experiment,
                   ) -> Dict[str, ExperimentResult]:
    """Every (spec, seed) pair; results keyed by experiment id"""
    pool_specs = list(pool_specs or config.compare.pools)
    seeds = list(config.compare.seeds if seeds is None else seeds)
    threads = threads or config.compare.threads
    if not pool_specs or not seeds:
        raise UsageError("a comparison needs at least one pool spec and one seed")

    queue = ExperimentQueue(max_size=len(pool_specs) * len(seeds))
    for seed in seeds:
        for spec in pool_specs:
            success, error, _ = queue.add(spec, seed)
            if not success:
                logger.warning(error)

    splits = {seed: make_splits(config, seed) for seed in seeds}

    def worker():
        while True:
            experiment = queue.get_next()
            if experiment is None:
                return
            try:
                queue.complete(runner(experiment, splits[experiment.seed], config))
            except Exception:
                queue.fail(experiment)
                raise

    workers = max(1, min(threads, len(pool_specs) * len(seeds)))
    logger.info(f"Comparing {len(pool_specs)} pool specs x {len(seeds)} seeds on {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(worker) for _ in range(workers)]
        for future in futures:
            future.result()

    return dict(queue.results)


def rank_results(results: Dict[str, ExperimentResult]) -> List[RankedRow]:
    """One row per pool spec, by mean test accuracy (descending), ties broken by spec name"""
    by_spec: Dict[str, List[float]] = {}
    for result in sorted(results.values(), key=lambda r: (r.pool_spec, r.seed)):
        by_spec.setdefault(result.pool_spec, []).append(result.test_acc)
    order = sorted(by_spec, key=lambda spec: (-float(np.mean(by_spec[spec])), spec))
    return [
        RankedRow(rank=i, pool_spec=spec, mean_acc=float(np.mean(by_spec[spec])),
                  std_acc=float(np.std(by_spec[spec])), runs=len(by_spec[spec]))
        for i, spec in enumerate(order, 1)
    ]
