"""
Plain-text inputs and outputs of the command line
Floats are written with repr so values read back bit-exact
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Sequence, Union

import numpy as np

from harness.datasets import SyntheticDataset
from utils.error_handler import DataIOError, NumericalError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _fmt(value: float) -> str:
    return repr(float(value))


def _open_for_write(path: PathLike):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", newline="")
    except OSError as e:
        raise DataIOError(f"cannot write {path}: {e}") from e


def read_signal_csv(path: PathLike) -> np.ndarray:
    """Signal [C, T] from a CSV with header channel,t0,t1,... and one row per channel"""
    path = Path(path)
    try:
        with open(path, "r", newline="") as f:
            rows = [row for row in csv.reader(f) if row]
    except FileNotFoundError as e:
        raise DataIOError(f"signal file not found: {path}") from e
    except OSError as e:
        raise DataIOError(f"cannot read signal file {path}: {e}") from e

    if not rows:
        raise DataIOError(f"signal file is empty: {path}")
    header = [cell.strip() for cell in rows[0]]
    length = len(header) - 1
    if length < 1 or header[0] != "channel" or header[1:] != [f"t{i}" for i in range(length)]:
        raise DataIOError(f"{path}: header must be channel,t0,t1,...")
    if len(rows) < 2:
        raise DataIOError(f"{path}: no channel rows")

    values = []
    for index, row in enumerate(rows[1:]):
        if len(row) != length + 1:
            raise DataIOError(f"{path}: row {index + 1} has {len(row) - 1} values, expected {length}")
        try:
            channel = int(row[0])
            values.append([float(cell) for cell in row[1:]])
        except ValueError as e:
            raise DataIOError(f"{path}: row {index + 1} is not numeric: {e}") from e
        if channel != index:
            raise DataIOError(f"{path}: channel rows must be numbered 0, 1, ... in order")

    signal = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(signal)):
        raise NumericalError(f"{path}: signal contains NaN or Inf values")
    return signal


def write_signal_csv(path: PathLike, signal) -> Path:
    """Write [T] or [C, T] values; a leading batch axis of size 1 is dropped"""
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim == 3 and signal.shape[0] == 1:
        signal = signal[0]
    if signal.ndim == 1:
        signal = signal[None, :]
    if signal.ndim != 2:
        raise DataIOError(f"cannot write a signal of shape {signal.shape} as CSV")

    with _open_for_write(path) as f:
        writer = csv.writer(f)
        writer.writerow(["channel"] + [f"t{i}" for i in range(signal.shape[1])])
        for c, row in enumerate(signal):
            writer.writerow([c] + [_fmt(v) for v in row])
    return Path(path)


def write_dataset_csv(path: PathLike, dataset: SyntheticDataset) -> Path:
    """One row per (sample, channel): sample_id,channel,label,t0..t{T-1}"""
    with _open_for_write(path) as f:
        writer = csv.writer(f)
        writer.writerow(["sample_id", "channel", "label"] + [f"t{i}" for i in range(dataset.length)])
        for i, (signal, label) in enumerate(zip(dataset.signals, dataset.labels)):
            for c, row in enumerate(signal):
                writer.writerow([i, c, int(label)] + [_fmt(v) for v in row])
    logger.info(f"Exported {len(dataset)} samples to {path}")
    return Path(path)


def write_table_csv(path: PathLike, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
    with _open_for_write(path) as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    return Path(path)


def write_json(path: PathLike, payload: Any) -> Path:
    with _open_for_write(path) as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    return Path(path)


def read_json(path: PathLike) -> Any:
    path = Path(path)
    try:
        with open(path, "r") as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise DataIOError(f"file not found: {path}") from e
    except (OSError, json.JSONDecodeError) as e:
        raise DataIOError(f"cannot read JSON from {path}: {e}") from e
