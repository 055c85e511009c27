import numpy as np
import pytest

from harness.metrics import band_energy, band_fraction, corpus_wer, spike_energy_fraction, wer
from utils.error_handler import ShapeError, UsageError


def _reference_distance(hypothesis, reference):
    """Plain two-row Levenshtein distance"""
    previous = list(range(len(hypothesis) + 1))
    for i, r in enumerate(reference, start=1):
        current = [i]
        for j, h in enumerate(hypothesis, start=1):
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (r != h)))
        previous = current
    return previous[-1]


class TestWer:

    def test_perfect_match(self):
        result = wer("a b c".split(), "a b c".split())
        assert (result.errors, result.wer) == (0, 0.0)

    def test_substitution(self):
        result = wer("a x c".split(), "a b c".split())
        assert (result.substitutions, result.insertions, result.deletions) == (1, 0, 0)
        assert result.wer == pytest.approx(1 / 3)

    def test_insertion(self):
        result = wer("a b c d".split(), "a b c".split())
        assert (result.substitutions, result.insertions, result.deletions) == (0, 1, 0)

    def test_empty_hypothesis_is_all_deletions(self):
        result = wer([], ["a", "b"])
        assert (result.deletions, result.wer) == (2, 1.0)

    def test_wer_can_exceed_one(self):
        assert wer(["x", "y", "z"], ["a"]).wer == 3.0

    def test_ties_prefer_substitution(self):
        result = wer(["b"], ["a"])
        assert (result.substitutions, result.insertions, result.deletions) == (1, 0, 0)

    def test_empty_reference(self):
        with pytest.raises(UsageError):
            wer(["a"], [])

    def test_matches_independent_edit_distance(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            reference = rng.integers(0, 4, size=rng.integers(1, 9)).tolist()
            hypothesis = rng.integers(0, 4, size=rng.integers(0, 9)).tolist()
            result = wer(hypothesis, reference)
            assert result.errors == _reference_distance(hypothesis, reference)
            assert result.reference_length == len(reference)
            # the edit script has to account for both lengths
            assert len(reference) - result.deletions + result.insertions == len(hypothesis)


class TestCorpusWer:

    def test_counts_are_summed(self):
        total = corpus_wer([(["a", "x"], ["a", "b"]), (["c"], ["c", "d", "e"])])
        assert (total.substitutions, total.deletions, total.reference_length) == (1, 2, 5)
        assert total.wer == pytest.approx(3 / 5)

    def test_no_pairs(self):
        with pytest.raises(UsageError):
            corpus_wer([])


class TestBandEnergy:

    def test_parseval(self, rng):
        for length in (16, 17, 128):
            x = rng.standard_normal((3, length))
            total = band_energy(x, "low") + band_energy(x, "high")
            assert total == pytest.approx(float((x ** 2).sum()), rel=1e-10)

    def test_pure_tones(self):
        t = np.arange(64)
        low = np.sin(2 * np.pi * 2 * t / 64)
        high = np.sin(2 * np.pi * 20 * t / 64)
        assert band_fraction(low) == pytest.approx(0.0, abs=1e-12)
        assert band_fraction(high) == pytest.approx(1.0, abs=1e-12)
        assert band_energy(low + 0.5 * high, "high") == pytest.approx(0.25 * 32, rel=1e-10)

    def test_white_noise_splits_evenly(self):
        fractions = [band_fraction(np.random.default_rng(seed).standard_normal(128)) for seed in range(100)]
        # bins 32..64 carry 65 of the 128 Parseval weights
        assert np.mean(fractions) == pytest.approx(65 / 128, abs=0.03)

    def test_zero_signal(self):
        assert band_fraction(np.zeros(16)) == 0.0

    def test_unknown_band(self):
        with pytest.raises(UsageError):
            band_energy(np.ones(8), "mid")

    def test_single_frame(self):
        with pytest.raises(ShapeError):
            band_energy(np.ones(1), "low")


class TestSpikeEnergyFraction:

    def test_energy_near_spikes(self):
        d = np.array([0.0, 3.0, 0.0, 1.0])
        assert spike_energy_fraction(d, [2], radius=0) == pytest.approx(0.9)
        assert spike_energy_fraction(d, [7], radius=0) == pytest.approx(0.1)

    def test_zero_difference(self):
        assert spike_energy_fraction(np.zeros(4), [1]) == 0.0
