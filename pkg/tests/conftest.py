"""Shared fixtures"""

import numpy as np
import pytest
import yaml

from utils.config import build_config


TINY_CONFIG = {
    "model": {"hidden_channels": 4, "encoder_widths": [6], "classes": 4},
    "training": {"lr": 0.01, "epochs": 2, "batch_size": 8},
    "dataset": {"train_size": 16, "dev_size": 8, "test_size": 8, "length": 16, "channels": 2},
    "benchmark": {"pools": ["max", "avg", "tlp"], "sizes": [16], "repetitions": 5, "warmup": 2,
                  "batch_size": 4},
    "compare": {"pools": ["max", "avg"], "seeds": [0], "threads": 1},
    "logging": {"level": "WARNING"},
}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config():
    return build_config(TINY_CONFIG)


@pytest.fixture
def tiny_config_path(tmp_path):
    path = tmp_path / "tiny.yaml"
    path.write_text(yaml.safe_dump(TINY_CONFIG))
    return path
