"""
Configuration loading
YAML defaults, .env overrides and validated settings models
"""

import logging
import os
from pathlib import Path
from typing import List, Literal, Optional, Union

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from utils.error_handler import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).parent.parent / "config" / "config.yaml"

CONFIG_ENV = "LIFTPOOL_CONFIG"
THREADS_ENV = "LIFTPOOL_THREADS"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class TlpConfig(_Section):
    kernel_size: int = Field(5, ge=1, le=63, description="Predictor/updater kernel width K")
    predictor_arch: Literal["depthwise", "plain"] = "depthwise"
    weighting_kernel: int = Field(5, ge=1, le=63)
    weighting_norm: Literal["instance", "batch"] = "instance"
    weighting_mode: Literal["independent", "shared", "none"] = "independent"
    residual_weighting: bool = True
    norm_eps: float = Field(1e-5, gt=0.0)
    fusion: Literal["sum", "concat", "bottleneck", "only_s"] = "sum"


class ModelConfig(_Section):
    hidden_channels: int = Field(8, ge=1, le=1024)
    encoder_widths: List[int] = Field(default_factory=lambda: [192, 192])
    classes: int = Field(4, ge=2)
    locations: Literal["both", "first", "second", "none"] = "both"

    @field_validator("encoder_widths")
    @classmethod
    def _positive_widths(cls, value: List[int]) -> List[int]:
        if any(w < 1 for w in value):
            raise ValueError("encoder widths must be positive")
        return value


class TrainConfig(_Section):
    lr: float = Field(0.003, ge=0.0)
    epochs: int = Field(12, ge=0)
    batch_size: int = Field(32, ge=1)
    weight_decay: float = Field(0.001, ge=0.0)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    eps: float = Field(1e-8, gt=0.0)
    alpha_u: float = Field(0.001, ge=0.0)
    alpha_p: float = Field(0.001, ge=0.0)
    use_cu: bool = True
    use_cp: bool = True
    lr_milestones: List[int] = Field(default_factory=list)
    lr_decay: float = Field(0.2, gt=0.0)

    @property
    def effective_alpha_u(self) -> float:
        return self.alpha_u if self.use_cu else 0.0

    @property
    def effective_alpha_p(self) -> float:
        return self.alpha_p if self.use_cp else 0.0

    def lr_at(self, epoch: int) -> float:
        """Learning rate for a 0-based epoch under the step-decay schedule"""
        passed = sum(1 for milestone in self.lr_milestones if epoch >= milestone)
        return self.lr * (self.lr_decay ** passed)


class DatasetConfig(_Section):
    task: Literal["band-mix", "spike-pattern"] = "band-mix"
    train_size: int = Field(800, ge=4)
    dev_size: int = Field(200, ge=4)
    test_size: int = Field(200, ge=4)
    length: int = Field(128, ge=8)
    channels: int = Field(2, ge=1)
    noise: float = Field(0.3, ge=0.0)


class BenchConfig(_Section):
    pools: List[str] = Field(default_factory=lambda: ["max", "avg", "tlp"])
    sizes: List[int] = Field(default_factory=lambda: [128])
    repetitions: int = Field(5, ge=5)
    warmup: int = Field(2, ge=2)
    batch_size: int = Field(32, ge=1)


class CompareConfig(_Section):
    pools: List[str] = Field(default_factory=lambda: ["max", "avg", "lp:2", "mixed", "stochastic", "soft", "tlp"])
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4])
    threads: int = Field(1, ge=1)


class LoggingConfig(_Section):
    level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = "INFO"
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class AppConfig(_Section):
    tlp: TlpConfig = Field(default_factory=TlpConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    training: TrainConfig = Field(default_factory=TrainConfig)
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    benchmark: BenchConfig = Field(default_factory=BenchConfig)
    compare: CompareConfig = Field(default_factory=CompareConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    def with_overrides(self, **sections) -> "AppConfig":
        """Copy with per-section field overrides, e.g. with_overrides(training={"lr": 0.01})"""
        data = self.model_dump()
        for section, values in sections.items():
            if section not in data:
                raise ConfigurationError(f"unknown config section: {section}")
            data[section].update({k: v for k, v in values.items() if v is not None})
        return build_config(data)


def build_config(data: Optional[dict]) -> AppConfig:
    """Validate a raw mapping into an AppConfig"""
    try:
        return AppConfig.model_validate(data or {})
    except ValidationError as e:
        raise ConfigurationError(f"invalid configuration: {e}") from e


def load_config(path: Optional[Union[str, Path]] = None) -> AppConfig:
    """Load YAML config, applying LIFTPOOL_CONFIG and LIFTPOOL_THREADS from the environment"""
    load_dotenv()

    config_path = Path(path or os.getenv(CONFIG_ENV) or DEFAULT_CONFIG_PATH)
    if not config_path.exists():
        raise ConfigurationError(f"config file not found: {config_path}")

    with open(config_path, 'r') as f:
        try:
            data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigurationError(f"config file is not valid YAML: {config_path}: {e}") from e

    threads = os.getenv(THREADS_ENV)
    if threads:
        try:
            data.setdefault("compare", {})["threads"] = int(threads)
        except ValueError as e:
            raise ConfigurationError(f"{THREADS_ENV} must be an integer, got {threads!r}") from e

    return build_config(data)


def setup_logging(config: AppConfig, level: Optional[str] = None):
    """Configure root logging from the logging section"""
    logging.basicConfig(
        level=getattr(logging, (level or config.logging.level).upper()),
        format=config.logging.format,
        force=True,
    )
