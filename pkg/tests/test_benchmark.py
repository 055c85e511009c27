import numpy as np
import pytest

from harness.benchmark import accuracy_summary, run_benchmark, tlp_flop_share
from harness.model import build_model
from kernels.flops import count_flops
from tlp.layer import describe_tlp
from utils.config import ModelConfig
from utils.error_handler import ConfigurationError

TINY = ModelConfig(hidden_channels=4, encoder_widths=[6], classes=4)


def _bench(**kwargs):
    arguments = dict(pool_specs=["max", "avg", "tlp"], sizes=[16, 33], batch_size=4, model_config=TINY,
                     timed=False)
    arguments.update(kwargs)
    return run_benchmark(**arguments)


class TestBenchmark:

    def test_max_and_average_cost_the_same(self):
        report = _bench()
        for size in (16, 33):
            assert report.flops[f"max@T{size}"]["total_flops"] == report.flops[f"avg@T{size}"]["total_flops"]

    def test_tlp_overhead_matches_its_layers(self):
        report = _bench()
        model = build_model("tlp", 2, 4, 0, TINY)
        for size in (16, 33):
            expected = sum(count_flops(describe_tlp(slot.tlp, length)).total_flops
                           for slot, length in zip(model.slots, (size, (size + 1) // 2)))
            overhead = report.tlp_overhead[f"T{size}"]
            assert overhead["added_flops"] == expected
            assert overhead["tlp_component_flops"] == expected

    def test_deterministic_report(self):
        first = _bench().to_dict()
        second = _bench(timed=True).to_dict()
        assert first == second
        assert "timing" not in first

    def test_memory(self):
        memory = _bench().memory
        assert all(value > 0 for value in memory.values())
        assert memory["tlp@T16"] > memory["max@T16"]

    def test_timing(self):
        report = _bench(pool_specs=["max"], sizes=[16])
        assert report.timing == {}
        timing = _bench(pool_specs=["max"], sizes=[16], timed=True).timing_dict()["timing"]["max@T16"]
        assert timing["repetitions"] == 5
        assert timing["median_seconds"] >= 0.0

    def test_no_overhead_without_both_baselines(self):
        assert _bench(pool_specs=["avg", "tlp"]).tlp_overhead == {}

    def test_accuracy_summary(self):
        report = _bench(pool_specs=["max"], sizes=[16], accuracies={"max": [0.5, 0.7], "tlp": []})
        assert report.accuracy == {"max": {"mean": pytest.approx(0.6), "std": pytest.approx(0.1), "runs": 2}}

    @pytest.mark.parametrize("repetitions,warmup", [(4, 2), (5, 1)])
    def test_minimum_repetitions(self, repetitions, warmup):
        with pytest.raises(ConfigurationError):
            _bench(repetitions=repetitions, warmup=warmup)


class TestFlopShare:

    def test_default_model_share(self):
        share = tlp_flop_share()
        assert share == pytest.approx(172_800 / (10_103_616 + 172_800))
        assert share < 0.02

    def test_summary_helper(self):
        summary = accuracy_summary({"tlp": [1.0, 0.5, 0.0]})
        assert summary["tlp"]["mean"] == 0.5
        assert summary["tlp"]["std"] == pytest.approx(np.sqrt(1 / 6))
