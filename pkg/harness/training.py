"""
Training and evaluation loops
Adam on cross-entropy plus the weighted lifting regularizers
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from tqdm import tqdm

from harness.datasets import SyntheticDataset
from harness.model import SequenceModel
from kernels import ops
from kernels.optim import AdamState, adam_step
from kernels.tensor import GradientTape, backward
from tlp.losses import total_loss
from utils.config import TrainConfig
from utils.error_handler import DataIOError, NumericalError, UsageError

logger = logging.getLogger(__name__)

METRICS_HEADER = ("epoch", "task_loss", "c_u", "c_p", "total", "dev_acc")


@dataclass
class EpochMetrics:
    epoch: int
    task_loss: float
    c_u: float
    c_p: float
    total: float
    dev_acc: float

    def as_row(self) -> List[str]:
        return [str(self.epoch)] + [repr(float(getattr(self, name))) for name in METRICS_HEADER[1:]]


@dataclass
class TrainResult:
    model: SequenceModel
    log: List[EpochMetrics] = field(default_factory=list)
    optimizer: Optional[AdamState] = None

    @property
    def final(self) -> Optional[EpochMetrics]:
        return self.log[-1] if self.log else None


def evaluate(model: SequenceModel, dataset: SyntheticDataset, batch_size: int = 256) -> float:
    """Fraction of argmax-correct predictions; stochastic pooling runs in eval mode"""
    if dataset is None or len(dataset) == 0:
        raise UsageError("cannot evaluate on an empty dataset")
    correct = 0
    for signals, labels in dataset.batches(batch_size):
        correct += int((model.predict(signals) == labels).sum())
    return correct / len(dataset)


def train(model: SequenceModel, dataset: SyntheticDataset, config: Optional[TrainConfig] = None,
          seed: int = 0, dev: Optional[SyntheticDataset] = None,
          metrics_path: Optional[Union[str, Path]] = None, progress: bool = False) -> TrainResult:
    """Train in place; the log holds epoch means of every loss term and the dev accuracy (NaN without dev)"""
    config = config or TrainConfig()
    if len(dataset) == 0:
        raise UsageError("cannot train on an empty dataset")

    rng = np.random.default_rng(seed)
    params = model.named_parameters()
    state = AdamState(lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.eps,
                      weight_decay=config.weight_decay)
    alpha_u, alpha_p = config.effective_alpha_u, config.effective_alpha_p
    result = TrainResult(model=model, optimizer=state)

    if metrics_path is not None:
        start_metrics_csv(metrics_path)

    epochs = tqdm(range(config.epochs), desc=f"train {model.pool_spec}", disable=not progress, leave=False)
    for epoch in epochs:
        state.lr = config.lr_at(epoch)
        sums = np.zeros(4)
        batches = 0

        for signals, labels in dataset.batches(config.batch_size, rng):
            with GradientTape() as tape:
                out = model.forward(signals, training=True, rng=rng)
                task = ops.cross_entropy(out.logits, labels)
                report = total_loss(task, out.lift_losses, alpha_u, alpha_p)
            if not report.is_finite():
                raise NumericalError(f"non-finite loss at epoch {epoch}: {report.to_dict()}")
            grads = backward(tape, report.objective)
            adam_step(params, grads.for_params(params), state)
            sums += (report.task_loss, report.c_u, report.c_p, report.total)
            batches += 1

        means = sums / batches
        dev_acc = evaluate(model, dev) if dev is not None and len(dev) else math.nan
        metrics = EpochMetrics(epoch, *map(float, means), dev_acc=dev_acc)
        result.log.append(metrics)
        if metrics_path is not None:
            append_metrics_csv(metrics_path, metrics)

        logger.info(f"epoch {epoch}: task={metrics.task_loss:.4f} c_u={metrics.c_u:.4f} "
                    f"c_p={metrics.c_p:.4f} total={metrics.total:.4f} dev_acc={dev_acc:.3f}")

    return result


def start_metrics_csv(path: Union[str, Path]):
    """Create (or truncate) a metrics log holding only the header"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            csv.writer(f).writerow(METRICS_HEADER)
    except OSError as e:
        raise DataIOError(f"cannot write metrics log {path}: {e}") from e


def append_metrics_csv(path: Union[str, Path], metrics: EpochMetrics):
    try:
        with open(path, "a", newline="") as f:
            csv.writer(f).writerow(metrics.as_row())
    except OSError as e:
        raise DataIOError(f"cannot append to metrics log {path}: {e}") from e


def read_metrics_csv(path: Union[str, Path]) -> List[EpochMetrics]:
    try:
        with open(path, "r", newline="") as f:
            rows = list(csv.DictReader(f))
    except OSError as e:
        raise DataIOError(f"cannot read metrics log {path}: {e}") from e
    try:
        return [EpochMetrics(int(r["epoch"]), *(float(r[k]) for k in METRICS_HEADER[1:])) for r in rows]
    except (KeyError, ValueError) as e:
        raise DataIOError(f"malformed metrics log {path}: {e}") from e


def loss_trend_ok(values: Sequence[float], start: int = 5, window: int = 10, tolerance: float = 0.05) -> bool:
    """Epoch series is non-increasing across consecutive `window`-epoch blocks after `start`.

    Each block mean may exceed the previous one by at most `tolerance` (relative).
    """
    values = np.asarray(values[start:], dtype=np.float64)
    blocks = [values[i:i + window].mean() for i in range(0, len(values) - window + 1, window)]
    return all(later <= earlier * (1.0 + tolerance) for earlier, later in zip(blocks, blocks[1:]))
