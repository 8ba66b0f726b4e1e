"""Sliding-mode and cascade observers for disturbance estimation and
compensation control of linear plants."""

__version__ = "0.1.0"

from .control import ControlLaw, EstimateSource, control_input
from .metrics import ComparisonReport, build_report, signal_l2
from .model import (
    AugmentedModel, DisturbanceBounds, ModelError, PlantModel, build_augmented, validate_plant,
)
from .observers import SwitchConfig, cascade_rhs, lowpass_rhs, smo_rhs, smoothed_sign
from .sim import (
    DisturbanceSpec, SimConfig, Trajectory, disturbance_eval, integrate_closed_loop, noise_sample,
)
from .synth import Certificate, GainSet, LmiRegion, certify_closed_loop, synthesize

__all__ = [
    "AugmentedModel", "Certificate", "ComparisonReport", "ControlLaw", "DisturbanceBounds",
    "DisturbanceSpec", "EstimateSource", "GainSet", "LmiRegion", "ModelError", "PlantModel",
    "SimConfig", "SwitchConfig", "Trajectory", "build_augmented", "build_report",
    "cascade_rhs", "certify_closed_loop", "control_input", "disturbance_eval",
    "integrate_closed_loop", "lowpass_rhs", "noise_sample", "signal_l2", "smo_rhs",
    "smoothed_sign", "synthesize", "validate_plant",
]
