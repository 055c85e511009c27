# TLP package: lifting, component weighting, fusion, losses, checkpoints

from tlp.params import TlpParams, init_tlp_params
from tlp.lifting import LiftPair, haar_lift, inverse_lift, lift, predict, split, update
from tlp.weighting import component_weight
from tlp.fusion import fuse
from tlp.losses import LossReport, lift_losses, total_loss
from tlp.layer import describe_tlp, tlp_forward

__all__ = [
    "TlpParams", "init_tlp_params",
    "LiftPair", "haar_lift", "inverse_lift", "lift", "predict", "split", "update",
    "component_weight", "fuse",
    "LossReport", "lift_losses", "total_loss",
    "describe_tlp", "tlp_forward",
]
