"""
Parameter checkpoints
Versioned JSON text; floats are written with repr, which round-trips f64 exactly
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from kernels.tensor import Tensor
from tlp.params import TlpParams, init_tlp_params
from utils.config import TlpConfig
from utils.error_handler import ConfigurationError, DataIOError, ShapeError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


class CheckpointFile(BaseModel):
    """On-disk checkpoint layout"""
    model_config = ConfigDict(extra="forbid")

    format_version: int
    K: int = Field(ge=1)
    fusion: str
    weighting_kernel: int = Field(ge=1)
    alpha_u: float = Field(ge=0.0)
    alpha_p: float = Field(ge=0.0)
    tlp: Dict[str, Any] = Field(default_factory=dict)
    model: Dict[str, Any] = Field(default_factory=dict)
    params: Dict[str, Any]


def build_checkpoint(params: Dict[str, Tensor], tlp_config: TlpConfig, alpha_u: float, alpha_p: float,
                     model: Optional[Dict[str, Any]] = None) -> CheckpointFile:
    return CheckpointFile(
        format_version=FORMAT_VERSION,
        K=tlp_config.kernel_size,
        fusion=tlp_config.fusion,
        weighting_kernel=tlp_config.weighting_kernel,
        alpha_u=alpha_u,
        alpha_p=alpha_p,
        tlp=tlp_config.model_dump(),
        model=model or {},
        params={name: tensor.data.tolist() for name, tensor in params.items()},
    )


def save_checkpoint(path: Union[str, Path], checkpoint: CheckpointFile) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(checkpoint.model_dump(), f, indent=1)
            f.write("\n")
    except OSError as e:
        raise DataIOError(f"cannot write checkpoint {path}: {e}") from e
    logger.info(f"Saved checkpoint: {path} ({len(checkpoint.params)} tensors)")
    return path


def load_checkpoint(path: Union[str, Path]) -> CheckpointFile:
    path = Path(path)
    try:
        with open(path, "r") as f:
            raw = json.load(f)
    except FileNotFoundError as e:
        raise DataIOError(f"checkpoint not found: {path}") from e
    except (OSError, json.JSONDecodeError) as e:
        raise DataIOError(f"cannot read checkpoint {path}: {e}") from e

    try:
        checkpoint = CheckpointFile.model_validate(raw)
    except ValidationError as e:
        raise DataIOError(f"malformed checkpoint {path}: {e}") from e
    if checkpoint.format_version != FORMAT_VERSION:
        raise DataIOError(f"unsupported checkpoint format_version {checkpoint.format_version} "
                          f"(expected {FORMAT_VERSION})")
    return checkpoint


def checkpoint_arrays(checkpoint: CheckpointFile) -> Dict[str, np.ndarray]:
    return {name: np.asarray(value, dtype=np.float64) for name, value in checkpoint.params.items()}


def assign_arrays(targets: Dict[str, Tensor], arrays: Dict[str, np.ndarray], strict: bool = True):
    """Copy arrays into same-named tensors, checking shapes"""
    missing = [name for name in targets if name not in arrays]
    if strict and missing:
        raise ShapeError(f"checkpoint lacks parameters: {', '.join(missing)}")
    for name, tensor in targets.items():
        if name not in arrays:
            continue
        if arrays[name].shape != tensor.shape:
            raise ShapeError(f"parameter {name!r}: checkpoint shape {arrays[name].shape} "
                             f"does not match {tensor.shape}")
        tensor.data = arrays[name].copy()


def tlp_prefixes(checkpoint: CheckpointFile):
    """Name prefixes of every TLP layer stored in a checkpoint, in file order"""
    marker = "predictor.projection.weight"
    prefixes = []
    for name in checkpoint.params:
        if name.endswith(marker):
            prefixes.append(name[: -len(marker)].rstrip("."))
    return prefixes


def tlp_config_of(checkpoint: CheckpointFile) -> TlpConfig:
    try:
        return TlpConfig.model_validate(checkpoint.tlp or {
            "kernel_size": checkpoint.K,
            "fusion": checkpoint.fusion,
            "weighting_kernel": checkpoint.weighting_kernel,
        })
    except ValidationError as e:
        raise DataIOError(f"checkpoint carries an invalid TLP configuration: {e}") from e


def load_tlp_params(checkpoint: CheckpointFile, prefix: Optional[str] = None) -> TlpParams:
    """Rebuild a TLP layer from a checkpoint; defaults to its first TLP layer"""
    prefixes = tlp_prefixes(checkpoint)
    if not prefixes:
        raise ConfigurationError("checkpoint holds no TLP layer")
    if prefix is None:
        prefix = prefixes[0]
    elif prefix not in prefixes:
        raise ConfigurationError(f"checkpoint has no TLP layer {prefix!r}; found {prefixes}")

    arrays = checkpoint_arrays(checkpoint)
    lead = f"{prefix}." if prefix else ""
    channels = arrays[f"{lead}predictor.projection.weight"].shape[0]
    params = init_tlp_params(channels, tlp_config_of(checkpoint))
    assign_arrays(params.named_tensors(prefix), arrays)
    return params
