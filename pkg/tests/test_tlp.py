import numpy as np
import pytest

from harness.datasets import spike_signal
from harness.metrics import band_fraction, spike_energy_fraction
from kernels.flops import count_flops
from kernels.tensor import GradientTape, Tensor, backward
from pooling.baselines import pool_fixed
from tlp import (
    component_weight, describe_tlp, fuse, haar_lift, init_tlp_params, inverse_lift, lift, lift_losses,
    split, tlp_forward, total_loss,
)
from tlp.params import randomize_params
from tlp.weighting import reweight, weight_matrix
from utils.config import TlpConfig
from utils.error_handler import ConfigurationError, ShapeError


def _random_tlp(channels, seed, **options):
    rng = np.random.default_rng(seed)
    return randomize_params(init_tlp_params(channels, TlpConfig(**options), rng), rng)


class TestSplit:

    def test_example(self):
        x_e, x_o = split([1.0, 2.0, 3.0, 4.0])
        np.testing.assert_array_equal(x_e.data[0, 0], [2.0, 4.0])
        np.testing.assert_array_equal(x_o.data[0, 0], [1.0, 3.0])

    def test_odd_length_replicates_last_frame(self):
        x_e, x_o = split([1.0, 2.0, 3.0])
        np.testing.assert_array_equal(x_e.data[0, 0], [2.0, 3.0])
        np.testing.assert_array_equal(x_o.data[0, 0], [1.0, 3.0])

    def test_single_frame(self):
        x_e, x_o = split([7.0])
        assert x_e.shape == x_o.shape == (1, 1, 1)


class TestLifting:

    def test_zero_initialized_nets_output_zero(self, rng):
        theta = init_tlp_params(4, rng=rng)
        x = rng.standard_normal((2, 4, 10))
        x_e, x_o = split(x)
        pair = lift(x, theta.predictor, theta.updater)
        np.testing.assert_array_equal(pair.d.data, x_o.data)
        np.testing.assert_array_equal(pair.s.data, x_e.data)

    def test_haar_example(self):
        pair = haar_lift([1.0, 3.0, 2.0, 6.0])
        np.testing.assert_array_equal(pair.s.data[0, 0], [2.0, 4.0])
        np.testing.assert_array_equal(pair.d.data[0, 0], [-2.0, -4.0])

    def test_haar_s_is_bitwise_average_pooling(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            x = rng.standard_normal((1, 3, int(rng.integers(1, 40))))
            np.testing.assert_array_equal(haar_lift(x).s.data, pool_fixed("avg", x).data)

    def test_haar_d_is_bitwise_pairwise_difference(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            x = rng.standard_normal((1, 3, 2 * int(rng.integers(1, 40))))
            np.testing.assert_array_equal(haar_lift(x).d.data, x[..., 0::2] - x[..., 1::2])

    @pytest.mark.parametrize("channels", [1, 4, 16])
    @pytest.mark.parametrize("length", [8, 64, 127])
    def test_inverse_reconstructs_input(self, channels, length):
        for seed in range(6):
            theta = _random_tlp(channels, seed)
            x = np.random.default_rng(100 + seed).standard_normal((2, channels, length))
            pair = lift(x, theta.predictor, theta.updater)
            x_hat = inverse_lift(pair.s, pair.d, theta.predictor, theta.updater, length=length)
            assert x_hat.shape == x.shape
            np.testing.assert_allclose(x_hat.data, x, atol=1e-9)

    def test_inverse_with_plain_nets(self, rng):
        theta = _random_tlp(3, 7, predictor_arch="plain", kernel_size=3)
        x = rng.standard_normal((1, 3, 12))
        pair = lift(x, theta.predictor, theta.updater)
        np.testing.assert_allclose(inverse_lift(pair.s, pair.d, theta.predictor, theta.updater).data, x, atol=1e-9)

    def test_inverse_rejects_mismatched_bands(self, rng):
        theta = init_tlp_params(2, rng=rng)
        with pytest.raises(ShapeError):
            inverse_lift(np.zeros((1, 2, 4)), np.zeros((1, 2, 5)), theta.predictor, theta.updater)

    def test_inverse_rejects_bad_trim(self, rng):
        theta = init_tlp_params(1, rng=rng)
        with pytest.raises(ShapeError):
            inverse_lift(np.zeros((1, 1, 2)), np.zeros((1, 1, 2)), theta.predictor, theta.updater, length=5)

    def test_net_channel_mismatch(self, rng):
        theta = init_tlp_params(2, rng=rng)
        with pytest.raises(ShapeError):
            lift(rng.standard_normal((1, 3, 8)), theta.predictor, theta.updater)

    def test_spikes_concentrate_in_the_difference_band(self):
        for seed in range(20):
            x, spikes = spike_signal(length=128, spikes=4, seed=seed)
            pair = haar_lift(x)
            assert spike_energy_fraction(pair.d.data, spikes, radius=1) >= 0.99

    def test_haar_s_has_less_upper_band_energy(self):
        for seed in range(20):
            x, _ = spike_signal(length=128, spikes=4, seed=seed)
            assert band_fraction(haar_lift(x).s.data[0, 0]) < band_fraction(x)


class TestComponentWeighting:

    def test_weights_start_at_one_half(self, rng):
        theta = init_tlp_params(3, rng=rng)
        w = weight_matrix(rng.standard_normal((2, 3, 9)), theta.weight_s)
        np.testing.assert_array_equal(w.data, 0.5)

    def test_identity_at_initialization(self, rng):
        theta = init_tlp_params(3, rng=rng)
        x = rng.standard_normal((2, 3, 9))
        np.testing.assert_array_equal(component_weight(x, theta.weight_s).data, x)

    def test_weights_stay_in_open_unit_interval(self):
        theta = _random_tlp(4, 3)
        x = np.random.default_rng(3).standard_normal((2, 4, 32)) * 4
        w = weight_matrix(x, theta.weight_s).data
        assert np.all((w > 0) & (w < 1))

    def test_residual_output_bounds(self):
        theta = _random_tlp(4, 5)
        x = np.random.default_rng(5).standard_normal((2, 4, 16))
        y = component_weight(x, theta.weight_d).data
        assert np.all(np.abs(y) >= 0.5 * np.abs(x) - 1e-12)
        assert np.all(np.abs(y) <= 1.5 * np.abs(x) + 1e-12)

    def test_plain_product(self):
        x = np.array([[[2.0, -4.0]]])
        w = Tensor([[[0.25, 0.5]]])
        np.testing.assert_array_equal(reweight(x, w, residual=False).data, [[[0.5, -2.0]]])
        np.testing.assert_array_equal(reweight(x, w, residual=True).data, [[[1.5, -4.0]]])

    def test_weight_shape_mismatch(self):
        with pytest.raises(ShapeError):
            reweight(np.ones((1, 1, 4)), Tensor(np.ones((1, 1, 3))))


class TestFusion:

    def test_strategies(self, rng):
        s, d = rng.standard_normal((2, 3, 5)), rng.standard_normal((2, 3, 5))
        np.testing.assert_array_equal(fuse("sum", s, d).data, s + d)
        np.testing.assert_array_equal(fuse("only_s", s, d).data, s)
        np.testing.assert_array_equal(fuse("concat", s, d).data, np.concatenate([s, d], axis=1))

    def test_bottleneck_is_non_negative(self):
        theta = _random_tlp(3, 2, fusion="bottleneck")
        rng = np.random.default_rng(2)
        y = fuse("bottleneck", rng.standard_normal((2, 3, 5)), rng.standard_normal((2, 3, 5)), theta.fusion_net)
        assert y.shape == (2, 3, 5)
        assert np.all(y.data >= 0)

    def test_bottleneck_needs_parameters(self, rng):
        with pytest.raises(ConfigurationError):
            fuse("bottleneck", np.ones((1, 2, 3)), np.ones((1, 2, 3)))

    def test_unknown_strategy(self):
        with pytest.raises(ConfigurationError):
            fuse("product", np.ones((1, 2, 3)), np.ones((1, 2, 3)))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            fuse("sum", np.ones((1, 2, 3)), np.ones((1, 2, 4)))


class TestLosses:

    def test_lift_losses_example(self):
        c_u, c_p = lift_losses(np.array([1.0, 2.0]), np.array([1.0, 1.0]), np.array([0.0, 0.0]))
        assert float(c_u.data) == pytest.approx(2.5)
        assert float(c_p.data) == pytest.approx(1.0)

    def test_lift_losses_shape_mismatch(self):
        with pytest.raises(ShapeError):
            lift_losses(np.ones(3), np.ones(3), np.ones(2))

    def test_total_example(self):
        report = total_loss(Tensor(1.0), [(Tensor(2.0), Tensor(3.0))], alpha_u=0.001, alpha_p=0.001)
        assert report.total == pytest.approx(1.005)
        assert report.is_finite()

    def test_layers_are_summed(self):
        report = total_loss(1.0, [(Tensor(1.0), Tensor(2.0)), (Tensor(3.0), Tensor(4.0))], 0.1, 0.01)
        assert (report.c_u, report.c_p) == (4.0, 6.0)
        assert report.total == pytest.approx(1.0 + 0.4 + 0.06)

    def test_coefficients_scale_regularizer_gradients(self):
        c_u = Tensor(2.0, requires_grad=True)
        c_p = Tensor(3.0, requires_grad=True)
        with GradientTape() as tape:
            report = total_loss(Tensor(1.0), [(c_u, c_p)], alpha_u=0.2, alpha_p=0.05)
        grads = backward(tape, report.objective)
        assert float(grads[c_u]) == pytest.approx(0.2)
        assert float(grads[c_p]) == pytest.approx(0.05)

    def test_no_tlp_layers(self):
        report = total_loss(0.7, [])
        assert (report.total, report.c_u, report.c_p) == (0.7, 0.0, 0.0)

    def test_negative_coefficient(self):
        with pytest.raises(ConfigurationError):
            total_loss(1.0, [], alpha_u=-0.1)

    def test_non_finite_report(self):
        assert not total_loss(float("nan"), []).is_finite()


class TestTlpLayer:

    def test_sum_fusion_at_initialization_adds_the_halves(self, rng):
        theta = init_tlp_params(4, rng=rng)
        x = rng.standard_normal((2, 4, 11))
        x_e, x_o = split(x)
        out = tlp_forward(x, theta)
        assert out.y.shape == (2, 4, 6)
        np.testing.assert_array_equal(out.y.data, x_e.data + x_o.data)

    def test_losses_at_initialization(self, rng):
        theta = init_tlp_params(2, rng=rng)
        x = rng.standard_normal((1, 2, 16))
        x_e, x_o = split(x)
        out = tlp_forward(x, theta)
        assert float(out.c_u.data) == pytest.approx(np.mean((x_e.data - x_o.data) ** 2))
        assert float(out.c_p.data) == pytest.approx(np.mean(x_o.data ** 2))

    def test_output_channels_per_fusion(self, rng):
        x = rng.standard_normal((2, 3, 8))
        for fusion, channels in (("sum", 3), ("only_s", 3), ("concat", 6), ("bottleneck", 3)):
            theta = init_tlp_params(3, TlpConfig(fusion=fusion), rng)
            assert theta.out_channels == channels
            assert tlp_forward(x, theta).y.shape == (2, channels, 4)

    def test_weighting_modes(self, rng):
        shared = init_tlp_params(2, TlpConfig(weighting_mode="shared"), rng)
        assert shared.weight_s is shared.weight_d
        assert any(name.startswith("weight_shared.") for name in shared.named_tensors())

        plain = init_tlp_params(2, TlpConfig(weighting_mode="none", predictor_arch="plain"), rng)
        names = list(plain.named_tensors())
        assert not any(name.startswith("weight_") for name in names)
        assert not any(".depthwise." in name for name in names)
        x = rng.standard_normal((1, 2, 6))
        x_e, x_o = split(x)
        np.testing.assert_array_equal(tlp_forward(x, plain).y.data, x_e.data + x_o.data)

    def test_parameter_count(self, rng):
        # 2 x (depthwise 4*5+4, projection 4*4+4) + 2 x (conv 4*4*5+4, scale 4, shift 4)
        assert init_tlp_params(4, rng=rng).parameter_count() == 2 * (24 + 20) + 2 * (84 + 8)

    def test_named_tensors_prefix(self, rng):
        names = init_tlp_params(2, rng=rng).named_tensors("pool1")
        assert "pool1.predictor.projection.weight" in names
        assert "pool1.weight_d.shift" in names

    @pytest.mark.parametrize("channels,length", [
        (1, 2), (1, 9), (2, 16), (3, 7), (4, 32), (8, 64), (8, 65), (16, 10), (5, 128), (12, 33),
    ])
    def test_flops_match_closed_form(self, rng, channels, length):
        theta = init_tlp_params(channels, rng=rng)
        c, half, k, kw = channels, (length + 1) // 2, theta.kernel_size, theta.config.weighting_kernel
        macs = 2 * half * (k * c + c * c) + 2 * kw * c * c * half
        # relu+tanh per net, difference, approximation, 3 per weighted band, sum
        elementwise = (4 + 2 + 6 + 1) * c * half
        report = count_flops(describe_tlp(theta, length))
        assert report.total_macs == macs
        assert report.total_flops == 2 * macs + elementwise
