# Harness package: synthetic tasks, model, training, metrics, benchmarking

from harness.datasets import SyntheticDataset, gen_dataset, spike_signal
from harness.model import SequenceModel, build_model
from harness.training import evaluate, train
from harness.metrics import WerBreakdown, band_energy, corpus_wer, wer
from harness.benchmark import BenchReport, run_benchmark

__all__ = [
    "SyntheticDataset", "gen_dataset", "spike_signal",
    "SequenceModel", "build_model",
    "evaluate", "train",
    "WerBreakdown", "band_energy", "corpus_wer", "wer",
    "BenchReport", "run_benchmark",
]
