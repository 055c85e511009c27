"""
Synthetic sequence-classification tasks

band-mix       low-band sinusoid + high-band sinusoid whose amplitude encodes the class
spike-pattern  class-specific spike motifs with temporal jitter over a smooth carrier
"""

import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np

from utils.error_handler import ConfigurationError, UsageError

logger = logging.getLogger(__name__)

TASKS = ("band-mix", "spike-pattern")
SPLITS = ("train", "dev", "test")
NUM_CLASSES = 4

HIGH_BAND_AMPLITUDES = (0.25, 0.75, 1.25, 1.75)
SPIKE_JITTER = 3
SPIKE_AMPLITUDE = 3.0


@dataclass
class SyntheticDataset:
    signals: np.ndarray  # [n, C, T]
    labels: np.ndarray   # [n]
    task: str
    split: str
    seed: int

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def channels(self) -> int:
        return self.signals.shape[1]

    @property
    def length(self) -> int:
        return self.signals.shape[2]

    def batches(self, batch_size: int, rng: Optional[np.random.Generator] = None) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        """Mini-batches in a shuffled order when rng is given, in file order otherwise"""
        if batch_size < 1:
            raise UsageError(f"batch size must be positive, got {batch_size}")
        order = rng.permutation(len(self)) if rng is not None else np.arange(len(self))
        for start in range(0, len(self), batch_size):
            index = order[start:start + batch_size]
            yield self.signals[index], self.labels[index]

    def class_counts(self) -> List[int]:
        return np.bincount(self.labels, minlength=NUM_CLASSES).tolist()


def _balanced_labels(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.permutation(np.arange(n) % NUM_CLASSES)


def _sinusoid(length: int, cycles, phase, amplitude=1.0) -> np.ndarray:
    """amplitude * sin(2 pi cycles t / T + phase), broadcasting over leading axes"""
    t = np.arange(length)
    cycles = np.asarray(cycles, dtype=np.float64)[..., None]
    phase = np.asarray(phase, dtype=np.float64)[..., None]
    return np.asarray(amplitude)[..., None] * np.sin(2.0 * np.pi * cycles * t / length + phase)


def _band_mix(labels, channels, length, noise, rng) -> np.ndarray:
    n = len(labels)
    shape = (n, channels)
    high_lo, high_hi = (5 * length) // 16, (7 * length) // 16
    if high_lo < length // 4 or high_hi <= high_lo:
        raise ConfigurationError(f"length {length} too short for band-mix")

    low = _sinusoid(length, rng.integers(1, 9, size=shape), rng.uniform(0, 2 * np.pi, size=shape))
    amplitude = np.asarray(HIGH_BAND_AMPLITUDES)[labels][:, None] * np.ones(shape)
    high = _sinusoid(length, rng.integers(high_lo, high_hi, size=shape),
                     rng.uniform(0, 2 * np.pi, size=shape), amplitude)
    return low + high + noise * rng.standard_normal((n, channels, length))


def _motif_positions(label: int, length: int) -> np.ndarray:
    """Fixed spike positions per class, spread over the sequence"""
    count = label + 2
    return np.round(np.linspace(0.15, 0.85, count) * (length - 1)).astype(int)


def _spike_pattern(labels, channels, length, noise, rng) -> np.ndarray:
    n = len(labels)
    carrier = _sinusoid(length, rng.integers(1, 4, size=(n, channels)),
                        rng.uniform(0, 2 * np.pi, size=(n, channels)))
    signals = carrier + noise * rng.standard_normal((n, channels, length))
    for i, label in enumerate(labels):
        base = _motif_positions(int(label), length)
        for c in range(channels):
            jitter = rng.integers(-SPIKE_JITTER, SPIKE_JITTER + 1, size=base.shape)
            positions = np.clip(base + jitter, 0, length - 1)
            signals[i, c, positions] += SPIKE_AMPLITUDE
    return signals


def gen_dataset(task: str, seed: int, n: int, split: str = "train", length: int = 128,
                channels: int = 2, noise: float = 0.3) -> SyntheticDataset:
    """Deterministic in (task, seed, split, n, length, channels, noise); classes balanced within 1"""
    if task not in TASKS:
        raise ConfigurationError(f"unknown task {task!r}; expected one of {TASKS}")
    if split not in SPLITS:
        raise ConfigurationError(f"unknown split {split!r}; expected one of {SPLITS}")
    if n < NUM_CLASSES:
        raise ConfigurationError(f"a dataset needs at least {NUM_CLASSES} samples, got {n}")
    if noise < 0:
        raise ConfigurationError("noise must be non-negative")

    rng = np.random.default_rng((seed, TASKS.index(task), SPLITS.index(split)))
    labels = _balanced_labels(n, rng)
    build = _band_mix if task == "band-mix" else _spike_pattern
    signals = build(labels, channels, length, noise, rng)

    logger.debug(f"Generated {task}/{split}: n={n}, seed={seed}, shape={signals.shape}")
    return SyntheticDataset(signals=signals, labels=labels, task=task, split=split, seed=seed)


def spike_signal(length: int = 128, spikes: int = 4, seed: int = 0, cycles: int = 1,
                 amplitude: float = 5.0, min_gap: int = 4) -> Tuple[np.ndarray, np.ndarray]:
    """Low-frequency sinusoid plus sparse, well separated spikes.

    Returns the signal [T] and the sorted spike positions.
    """
    if spikes * min_gap > length:
        raise ConfigurationError(f"{spikes} spikes {min_gap} frames apart do not fit in {length} frames")
    rng = np.random.default_rng(seed)
    x = _sinusoid(length, cycles, rng.uniform(0, 2 * np.pi))

    positions: List[int] = []
    for _ in range(1000 * spikes):
        candidate = int(rng.integers(2, length - 2))
        if all(abs(candidate - p) >= min_gap for p in positions):
            positions.append(candidate)
        if len(positions) == spikes:
            break
    else:
        raise ConfigurationError(f"could not place {spikes} spikes {min_gap} frames apart in {length} frames")
    positions = np.sort(np.asarray(positions))
    signs = rng.choice([-1.0, 1.0], size=spikes)
    x[positions] += signs * amplitude
    return x, positions
