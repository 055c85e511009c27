"""
Evaluation metrics: word error rate and spectral band energy
"""

import logging
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence, Tuple

import numpy as np

from utils.error_handler import ShapeError, UsageError

logger = logging.getLogger(__name__)

BANDS = ("low", "high")


@dataclass(frozen=True)
class WerBreakdown:
    substitutions: int
    insertions: int
    deletions: int
    reference_length: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def wer(self) -> float:
        return self.errors / self.reference_length

    def __add__(self, other: "WerBreakdown") -> "WerBreakdown":
        return WerBreakdown(
            self.substitutions + other.substitutions,
            self.insertions + other.insertions,
            self.deletions + other.deletions,
            self.reference_length + other.reference_length,
        )


def edit_table(hypothesis: Sequence[Hashable], reference: Sequence[Hashable]) -> np.ndarray:
    """Levenshtein table; entry [i, j] is the distance between reference[:i] and hypothesis[:j]"""
    n, m = len(reference), len(hypothesis)
    table = np.zeros((n + 1, m + 1), dtype=np.int64)
    table[:, 0] = np.arange(n + 1)
    table[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = 0 if reference[i - 1] == hypothesis[j - 1] else 1
            table[i, j] = min(table[i - 1, j - 1] + cost, table[i - 1, j] + 1, table[i, j - 1] + 1)
    return table


def wer(hypothesis: Sequence[Hashable], reference: Sequence[Hashable]) -> WerBreakdown:
    """Minimal edit script from reference to hypothesis.

    Backtrace prefers substitution/match, then deletion, then insertion.
    """
    hypothesis, reference = list(hypothesis), list(reference)
    if not reference:
        raise UsageError("WER is undefined for an empty reference")
    table = edit_table(hypothesis, reference)

    i, j = len(reference), len(hypothesis)
    subs = ins = dels = 0
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            cost = 0 if reference[i - 1] == hypothesis[j - 1] else 1
            if table[i, j] == table[i - 1, j - 1] + cost:
                subs += cost
                i, j = i - 1, j - 1
                continue
        if i > 0 and table[i, j] == table[i - 1, j] + 1:
            dels += 1
            i -= 1
            continue
        ins += 1
        j -= 1

    return WerBreakdown(substitutions=subs, insertions=ins, deletions=dels, reference_length=len(reference))


def corpus_wer(pairs: Iterable[Tuple[Sequence[Hashable], Sequence[Hashable]]]) -> WerBreakdown:
    """Counts summed over (hypothesis, reference) sentence pairs"""
    total = None
    for hypothesis, reference in pairs:
        breakdown = wer(hypothesis, reference)
        total = breakdown if total is None else total + breakdown
    if total is None:
        raise UsageError("corpus WER needs at least one sentence pair")
    return total


def _spectral_energy(x) -> Tuple[np.ndarray, np.ndarray]:
    """Per-bin energies (one-sided, Parseval-weighted) summed over leading axes, and bin indices"""
    x = np.asarray(x, dtype=np.float64)
    t = x.shape[-1]
    if t < 2:
        raise ShapeError(f"band energy needs at least two frames, got {t}")
    spectrum = np.fft.rfft(x, axis=-1)
    weights = np.full(spectrum.shape[-1], 2.0)
    weights[0] = 1.0
    if t % 2 == 0:
        weights[-1] = 1.0
    energy = (np.abs(spectrum) ** 2 * weights / t).reshape(-1, spectrum.shape[-1]).sum(axis=0)
    return energy, np.arange(spectrum.shape[-1])


def band_energy(x, band: str) -> float:
    """Energy in the lower (bins k < T/4) or upper half of the frequency range, summed over channels"""
    if band not in BANDS:
        raise UsageError(f"unknown band {band!r}; expected one of {BANDS}")
    energy, bins = _spectral_energy(x)
    t = np.asarray(x).shape[-1]
    low = bins < t / 4.0
    return float(energy[low].sum() if band == "low" else energy[~low].sum())


def band_fraction(x) -> float:
    """Share of the signal energy in the upper band; 0 for an all-zero signal"""
    low, high = band_energy(x, "low"), band_energy(x, "high")
    total = low + high
    return high / total if total > 0 else 0.0


def spike_energy_fraction(d, spikes: Sequence[int], radius: int = 1) -> float:
    """Share of ||d||^2 at difference frames whose pair (2i, 2i+1) lies within `radius` of a spike"""
    d = np.asarray(d, dtype=np.float64)
    energy = (d.reshape(-1, d.shape[-1]) ** 2).sum(axis=0)
    total = energy.sum()
    if total == 0:
        return 0.0
    near = np.zeros(d.shape[-1], dtype=bool)
    frames = np.arange(d.shape[-1])
    for spike in spikes:
        near |= (np.abs(2 * frames - spike) <= radius) | (np.abs(2 * frames + 1 - spike) <= radius)
    return float(energy[near].sum() / total)
