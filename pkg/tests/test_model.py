import numpy as np
import pytest

from harness.model import build_model
from kernels.flops import count_flops
from utils.config import ModelConfig, TlpConfig
from utils.error_handler import ConfigurationError, ShapeError

TINY = ModelConfig(hidden_channels=4, encoder_widths=[6], classes=4)


def _tiny(pool_spec, seed=0, **options):
    config = TINY.model_copy(update=options) if options else TINY
    return build_model(pool_spec, channels=2, classes=4, seed=seed, model_config=config)


class TestBuildModel:

    def test_parameter_counts(self):
        # encoders 18 + 28, temporal convs 2 x 84, head 20
        assert _tiny("max").parameter_count() == 234
        assert _tiny("avg").parameter_count() == 234
        assert _tiny("mixed").parameter_count() == 236
        # one TLP layer over 4 channels holds 272 parameters
        assert _tiny("tlp").parameter_count() == 234 + 2 * 272

    def test_default_model_parameter_count(self):
        model = build_model("max", channels=2, classes=4, seed=0)
        assert model.parameter_count() == 576 + 37056 + 1544 + 2 * 328 + 36

    def test_seeded(self):
        first, second = _tiny("tlp", seed=3).state_dict(), _tiny("tlp", seed=3).state_dict()
        assert first.keys() == second.keys()
        for name in first:
            np.testing.assert_array_equal(first[name], second[name])
        assert not np.array_equal(first["conv1.weight"], _tiny("tlp", seed=4).state_dict()["conv1.weight"])

    def test_parameter_names(self):
        names = list(_tiny("tlp").named_parameters())
        assert names[:4] == ["encoder0.weight", "encoder0.bias", "encoder1.weight", "encoder1.bias"]
        assert "pool1.predictor.projection.weight" in names
        assert "pool2.weight_s.conv.weight" in names
        assert names[-2:] == ["head.weight", "head.bias"]

    def test_locations_keep_max_pooling_elsewhere(self):
        model = _tiny("tlp", locations="first")
        assert [slot.spec for slot in model.slots] == ["tlp", "max"]
        names = list(model.named_parameters())
        assert any(name.startswith("pool1.") for name in names)
        assert not any(name.startswith("pool2.") for name in names)
        assert [slot.spec for slot in _tiny("tlp", locations="none").slots] == ["max", "max"]

    def test_concat_fusion_widens_following_layers(self):
        model = build_model("tlp", 2, 4, 0, model_config=TINY, tlp_config=TlpConfig(fusion="concat"))
        assert model.conv2.in_channels == 8
        assert model.head_weight.shape == (4, 8)
        assert model.forward(np.zeros((2, 2, 16))).logits.shape == (2, 4)

    def test_invalid_pool_spec(self):
        with pytest.raises(ConfigurationError):
            _tiny("median")


class TestForward:

    @pytest.mark.parametrize("spec", ["max", "avg", "lp:2", "mixed", "stochastic", "soft", "tlp"])
    def test_logit_shape(self, spec, rng):
        out = _tiny(spec).forward(rng.standard_normal((3, 2, 17)), training=True, rng=rng)
        assert out.logits.shape == (3, 4)
        assert np.all(np.isfinite(out.logits.data))

    def test_only_tlp_slots_report_lifting_losses(self, rng):
        x = rng.standard_normal((2, 2, 16))
        assert len(_tiny("tlp").forward(x).lift_losses) == 2
        assert len(_tiny("tlp", locations="second").forward(x).lift_losses) == 1
        assert _tiny("max").forward(x).lift_losses == []

    def test_eval_mode_is_deterministic(self, rng):
        model = _tiny("stochastic")
        x = rng.standard_normal((4, 2, 16))
        np.testing.assert_array_equal(model.predict(x), model.predict(x))

    def test_state_dict_round_trip(self, rng):
        source, target = _tiny("tlp", seed=1), _tiny("tlp", seed=2)
        target.load_state_dict(source.state_dict())
        x = rng.standard_normal((2, 2, 16))
        np.testing.assert_array_equal(source.forward(x).logits.data, target.forward(x).logits.data)

    def test_state_dict_shape_mismatch(self):
        state = _tiny("max").state_dict()
        state["head.bias"] = np.zeros(5)
        with pytest.raises(ShapeError):
            _tiny("max").load_state_dict(state)


class TestDescribe:

    def test_default_model_flops(self):
        model = build_model("max", channels=2, classes=4, seed=0)
        assert count_flops(model.describe(128)).total_flops == 10_103_616

    def test_pool_choice_does_not_change_flops(self):
        assert count_flops(_tiny("max").describe(32)).total_flops == count_flops(_tiny("avg").describe(32)).total_flops

    def test_components(self):
        assert set(count_flops(_tiny("max").describe(32)).components) == {"encoder", "head", "pool"}
        assert set(count_flops(_tiny("tlp").describe(32)).components) == {"encoder", "head", "tlp"}

    def test_tlp_share_is_small(self):
        report = count_flops(build_model("tlp", channels=2, classes=4, seed=0).describe(128))
        assert report.components["tlp"] == 115_200 + 57_600
        assert report.components["tlp"] / report.total_flops < 0.02
