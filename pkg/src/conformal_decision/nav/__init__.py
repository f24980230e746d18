"""Robot navigation among pedestrians."""

from .dynamics import RobotLimits, RobotState, check_feasible, rollout, wrap_angle
from .planner import CandidateSet, Obstacle, SplinePlan, generate_candidates, nav_loss, plan, score_candidates
from .predictor import PedestrianSet, PredictionBundle, ar_forecast, predict
from .scenario import NavScenario, ScenarioError, bundled_scenario, ingest_sdd, load_scenario
from .sim import EpisodeMetrics, EpisodeResult, run_episode

__all__ = [
    "RobotLimits",
    "RobotState",
    "check_feasible",
    "rollout",
    "wrap_angle",
    "CandidateSet",
    "Obstacle",
    "SplinePlan",
    "generate_candidates",
    "nav_loss",
    "plan",
    "score_candidates",
    "PedestrianSet",
    "PredictionBundle",
    "ar_forecast",
    "predict",
    "NavScenario",
    "ScenarioError",
    "bundled_scenario",
    "ingest_sdd",
    "load_scenario",
    "EpisodeMetrics",
    "EpisodeResult",
    "run_episode",
]
