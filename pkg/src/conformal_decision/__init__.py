"""Online risk control for decision making: conformal controllers, batch
calibration, and three simulated environments."""

from .aci import AciState, aci_update, conformal_radius
from .batch import BatchCalibration, LossCurve, calibrate
from .controller import (
    ControllerState,
    LossDirection,
    RiskTrace,
    SafetyEnvelope,
    empirical_risk,
    lemma_floor,
    rollout,
    run_controller,
    telescoping_risk,
    theorem_bound,
    update,
)

__version__ = "0.1.0"

__all__ = [
    "AciState",
    "aci_update",
    "conformal_radius",
    "BatchCalibration",
    "LossCurve",
    "calibrate",
    "ControllerState",
    "LossDirection",
    "RiskTrace",
    "SafetyEnvelope",
    "empirical_risk",
    "lemma_floor",
    "rollout",
    "run_controller",
    "telescoping_risk",
    "theorem_bound",
    "update",
]
