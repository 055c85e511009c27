import numpy as np
import pytest

from harness.gradcheck_suite import CHECKS, COMPOSITION_TOLERANCE, OP_TOLERANCE, run_gradcheck_suite
from kernels import ops
from kernels.tensor import GradientTape, Tensor, backward
from pooling.baselines import pool_fixed
from utils.error_handler import ConfigurationError


class TestGradcheckSuite:

    @pytest.mark.parametrize("check", list(CHECKS))
    def test_each_check_passes(self, check):
        report = run_gradcheck_suite(seeds=range(2), checks=[check])
        assert report.passed, [(r.seed, r.tensor, r.error) for r in report.failures]

    @pytest.mark.slow
    def test_full_suite_over_twenty_seeds(self):
        report = run_gradcheck_suite(seeds=range(20))
        assert report.passed, [(r.check, r.seed, r.tensor, r.error) for r in report.failures]
        assert set(report.worst()) == set(CHECKS)

    def test_tolerances(self):
        report = run_gradcheck_suite(seeds=[0], checks=["relu", "tlp_objective"])
        tolerances = {r.check: r.tolerance for r in report.results}
        assert tolerances == {"relu": OP_TOLERANCE, "tlp_objective": COMPOSITION_TOLERANCE}

    def test_deterministic(self):
        first = run_gradcheck_suite(seeds=[3], checks=["conv1d", "predict"])
        second = run_gradcheck_suite(seeds=[3], checks=["conv1d", "predict"])
        assert [r.error for r in first.results] == [r.error for r in second.results]

    def test_unknown_check(self):
        with pytest.raises(ConfigurationError):
            run_gradcheck_suite(seeds=[0], checks=["warp"])

    def test_empty_report_does_not_pass(self):
        assert not run_gradcheck_suite(seeds=[]).passed


class TestGradientRouting:

    def test_max_pool_gradient_is_a_selection(self, rng):
        x = Tensor(rng.standard_normal((2, 3, 10)), requires_grad=True)
        with GradientTape() as tape:
            loss = ops.total(pool_fixed("max", x))
        grad = backward(tape, loss)[x].reshape(2, 3, 5, 2)
        np.testing.assert_array_equal(grad.sum(axis=-1), 1.0)
        winners = x.data.reshape(2, 3, 5, 2).argmax(axis=-1)
        np.testing.assert_array_equal(grad.argmax(axis=-1), winners)

    def test_replicated_frame_collects_both_gradients(self):
        x = Tensor([[[1.0, 2.0, 3.0]]], requires_grad=True)
        with GradientTape() as tape:
            loss = ops.total(pool_fixed("avg", x))
        np.testing.assert_array_equal(backward(tape, loss)[x][0, 0], [0.5, 0.5, 1.0])
