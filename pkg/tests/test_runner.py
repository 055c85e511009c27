import threading
import time

import numpy as np
import pytest

from harness.runner import (
    Experiment, ExperimentQueue, ExperimentResult, make_splits, rank_results, run_comparison, run_experiment,
)
from utils.config import AppConfig
from utils.error_handler import UsageError


def _result(spec, seed, acc):
    return ExperimentResult(id=f"{spec}@seed{seed}", pool_spec=spec, seed=seed, test_acc=acc, dev_acc=acc,
                            final_task_loss=1.0, parameters=10)


class TestExperimentQueue:

    def test_add_and_positions(self):
        queue = ExperimentQueue(max_size=3)
        assert queue.add("max", 0) == (True, None, 1)
        assert queue.add("tlp", 0) == (True, None, 2)

    def test_duplicate_is_rejected(self):
        queue = ExperimentQueue()
        queue.add("max", 0)
        success, error, position = queue.add("max", 0)
        assert not success
        assert "already queued" in error
        assert position == -1

    def test_full_queue(self):
        queue = ExperimentQueue(max_size=1)
        queue.add("max", 0)
        success, error, _ = queue.add("avg", 0)
        assert not success
        assert "full" in error

    def test_lifecycle(self):
        queue = ExperimentQueue()
        queue.add("max", 1)
        experiment = queue.get_next()
        assert experiment.id == "max@seed1"
        assert queue.get_queue_info() == {"pending": 0, "running": 1, "finished": 0, "max_size": 1024}
        queue.complete(_result("max", 1, 0.5))
        assert queue.get_queue_info()["finished"] == 1
        assert queue.get_next() is None
        # finished experiments cannot be queued again
        assert not queue.add("max", 1)[0]

    def test_failure_releases_the_slot(self):
        queue = ExperimentQueue()
        queue.add("tlp", 2)
        queue.fail(queue.get_next())
        assert queue.get_queue_info()["running"] == 0


class TestRunComparison:

    def test_every_pair_runs_once(self, tiny_config):
        calls = []
        lock = threading.Lock()

        def runner(experiment: Experiment, splits, config):
            with lock:
                calls.append(experiment.id)
            return _result(experiment.pool_spec, experiment.seed, 0.25 * experiment.seed)

        results = run_comparison(tiny_config, ["max", "tlp"], seeds=[0, 1, 2], threads=2, runner=runner)
        assert sorted(calls) == sorted(results) == sorted(f"{s}@seed{n}" for s in ("max", "tlp") for n in range(3))

    def test_runner_errors_propagate(self, tiny_config):
        def runner(experiment, splits, config):
            raise RuntimeError("boom")

        with pytest.raises(RuntimeError):
            run_comparison(tiny_config, ["max"], seeds=[0], threads=1, runner=runner)

    def test_needs_specs_and_seeds(self, tiny_config):
        with pytest.raises(UsageError):
            run_comparison(tiny_config, ["max"], seeds=[])

    def test_real_experiments(self, tiny_config):
        results = run_comparison(tiny_config, ["max", "avg"], seeds=[0], threads=2)
        assert sorted(results) == ["avg@seed0", "max@seed0"]
        for result in results.values():
            assert 0.0 <= result.test_acc <= 1.0
            assert result.parameters > 0
        assert len(rank_results(results)) == 2

    def test_single_experiment_is_reproducible(self, tiny_config):
        splits = make_splits(tiny_config, 0)
        first = run_experiment(Experiment("tlp", 0), splits, tiny_config)
        second = run_experiment(Experiment("tlp", 0), make_splits(tiny_config, 0), tiny_config)
        assert first.to_dict() == second.to_dict()


class TestRankResults:

    def test_sorted_by_mean_accuracy(self):
        results = {r.id: r for r in [
            _result("max", 0, 0.4), _result("max", 1, 0.6),
            _result("tlp", 0, 0.8), _result("tlp", 1, 0.8),
            _result("avg", 0, 0.6), _result("avg", 1, 0.6),
        ]}
        rows = rank_results(results)
        assert [row.pool_spec for row in rows] == ["tlp", "avg", "max"]
        assert [row.rank for row in rows] == [1, 2, 3]
        assert rows[2].std_acc == pytest.approx(0.1)
        assert rows[0].runs == 2

    def test_ties_break_by_name(self):
        rows = rank_results({"b@seed0": _result("b", 0, 0.5), "a@seed0": _result("a", 0, 0.5)})
        assert [row.pool_spec for row in rows] == ["a", "b"]


@pytest.mark.slow
class TestBandMixComparison:

    def test_tlp_matches_max_on_band_mix(self):
        config = AppConfig()
        assert (config.dataset.task, config.dataset.train_size, config.dataset.dev_size,
                config.dataset.test_size, config.dataset.length) == ("band-mix", 800, 200, 200, 128)
        started = time.perf_counter()
        accuracies = {"tlp": [], "max": []}
        for seed in range(5):
            splits = make_splits(config, seed)
            for spec in accuracies:
                accuracies[spec].append(run_experiment(Experiment(spec, seed), splits, config).test_acc)
        elapsed = time.perf_counter() - started

        assert np.mean(accuracies["tlp"]) >= np.mean(accuracies["max"])
        assert np.mean(accuracies["tlp"]) >= 0.90
        assert elapsed < 600.0
