import numpy as np
import pytest

from harness.datasets import HIGH_BAND_AMPLITUDES, NUM_CLASSES, gen_dataset, spike_signal
from harness.metrics import band_energy
from utils.error_handler import ConfigurationError, UsageError


class TestGenDataset:

    @pytest.mark.parametrize("task", ["band-mix", "spike-pattern"])
    def test_deterministic(self, task):
        first = gen_dataset(task, seed=3, n=12)
        second = gen_dataset(task, seed=3, n=12)
        np.testing.assert_array_equal(first.signals, second.signals)
        np.testing.assert_array_equal(first.labels, second.labels)

    def test_seed_and_split_change_the_draw(self):
        base = gen_dataset("band-mix", seed=0, n=8)
        assert not np.array_equal(base.signals, gen_dataset("band-mix", seed=1, n=8).signals)
        assert not np.array_equal(base.signals, gen_dataset("band-mix", seed=0, n=8, split="dev").signals)

    def test_shapes(self):
        data = gen_dataset("spike-pattern", seed=0, n=6, length=64, channels=3)
        assert data.signals.shape == (6, 3, 64)
        assert (data.channels, data.length, len(data)) == (3, 64, 6)
        assert data.signals.dtype == np.float64

    @pytest.mark.parametrize("n", [4, 10, 13, 100])
    def test_classes_are_balanced(self, n):
        counts = gen_dataset("band-mix", seed=5, n=n).class_counts()
        assert len(counts) == NUM_CLASSES
        assert sum(counts) == n
        assert max(counts) - min(counts) <= 1

    def test_noise_free_band_mix_encodes_class_in_high_band(self):
        data = gen_dataset("band-mix", seed=2, n=40, length=128, channels=2, noise=0.0)
        for signal, label in zip(data.signals, data.labels):
            amplitude = HIGH_BAND_AMPLITUDES[label]
            assert band_energy(signal, "high") == pytest.approx(2 * amplitude ** 2 * 64, rel=1e-9)
            assert band_energy(signal, "low") == pytest.approx(2 * 64, rel=1e-9)

    def test_noise_free_spike_pattern_spike_count(self):
        data = gen_dataset("spike-pattern", seed=4, n=20, length=128, channels=2, noise=0.0)
        for signal, label in zip(data.signals, data.labels):
            for channel in signal:
                assert int((channel > 1.5).sum()) == label + 2

    def test_batches_cover_every_sample(self, rng):
        data = gen_dataset("band-mix", seed=0, n=10, length=32)
        seen = np.concatenate([labels for _, labels in data.batches(3, rng)])
        assert sorted(seen.tolist()) == sorted(data.labels.tolist())
        assert [len(labels) for _, labels in data.batches(4)] == [4, 4, 2]

    def test_batch_size_must_be_positive(self):
        with pytest.raises(UsageError):
            next(gen_dataset("band-mix", seed=0, n=4, length=32).batches(0))

    @pytest.mark.parametrize("kwargs", [
        {"task": "speech"},
        {"split": "valid"},
        {"n": 3},
        {"noise": -0.1},
        {"length": 4},
    ])
    def test_invalid_arguments(self, kwargs):
        arguments = {"task": "band-mix", "seed": 0, "n": 8, **kwargs}
        with pytest.raises(ConfigurationError):
            gen_dataset(**arguments)


class TestSpikeSignal:

    def test_spikes_are_separated(self):
        for seed in range(10):
            x, positions = spike_signal(length=128, spikes=4, seed=seed)
            assert x.shape == (128,)
            assert len(positions) == 4
            assert np.all(np.diff(positions) >= 4)

    def test_spikes_stand_out(self):
        x, positions = spike_signal(length=64, spikes=3, seed=1, amplitude=5.0)
        assert np.all(np.abs(x[positions]) >= 4.0)
        others = np.delete(x, positions)
        assert np.all(np.abs(others) <= 1.0)

    def test_too_many_spikes(self):
        with pytest.raises(ConfigurationError):
            spike_signal(length=16, spikes=5, min_gap=4)
