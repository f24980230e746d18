"""Sampling-based MPC planner and the navigation loss."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dynamics import RobotLimits, RobotState, candidate_controls, rollout


@dataclass(frozen=True)
class Obstacle:
    x: float
    y: float
    radius: float


@dataclass
class CandidateSet:
    states: np.ndarray  # (C, H + 1, 3)
    speeds: np.ndarray  # (C, H)
    omegas: np.ndarray  # (C,)

    @property
    def brake_index(self) -> int:
        return len(self.states) - 1

    def __len__(self) -> int:
        return len(self.states)


@dataclass
class SplinePlan:
    states: np.ndarray  # (H + 1, 3)
    speeds: np.ndarray  # (H,)
    cost: float
    clearance: float  # sum over lead times of distance to nearest predicted pedestrian
    index: int
    flags: set = field(default_factory=set)


def generate_candidates(robot: RobotState, limits: RobotLimits, horizon: int, count: int) -> CandidateSet:
    speeds, omegas = candidate_controls(robot, limits, horizon, count)
    return CandidateSet(rollout(robot, speeds, omegas, limits.dt), speeds, omegas)


def nearest_distances(positions: np.ndarray, predictions: np.ndarray) -> np.ndarray:
    """(C, H + 1) distance from each candidate waypoint to the nearest prediction."""
    if predictions.shape[0] == 0:
        return np.full(positions.shape[:2], np.inf)
    diff = positions[:, None, :, :] - predictions[None, :, :, :]
    return np.sqrt((diff**2).sum(axis=-1)).min(axis=1)


def score_candidates(cands: CandidateSet, goal, predictions: np.ndarray, lam: float):
    """Return (cost, goal_term, clearance) per candidate.

    cost = sum_tau ||u_tau - goal|| + lam * (-sum_tau min_i ||u_tau - x_tau^i||).
    Without predictions the avoidance term is zero.
    """
    pos = cands.states[:, :, :2]
    goal_term = np.sqrt(((pos - np.asarray(goal)) ** 2).sum(axis=-1)).sum(axis=1)
    if predictions.shape[0] == 0:
        clearance = np.zeros(len(cands))
    else:
        clearance = nearest_distances(pos, predictions).sum(axis=1)
    return goal_term - lam * clearance, goal_term, clearance


def feasible_mask(
    cands: CandidateSet,
    obstacles: Sequence[Obstacle] = (),
    predictions: np.ndarray | None = None,
    keep_out: float | None = None,
) -> np.ndarray:
    """Candidates clear of static obstacles and, if ``keep_out`` is set, of
    discs of that radius around every predicted position at lead >= 1."""
    pos = cands.states[:, 1:, :2]
    ok = np.ones(len(cands), dtype=bool)
    for ob in obstacles:
        d = np.sqrt(((pos - (ob.x, ob.y)) ** 2).sum(axis=-1))
        ok &= np.all(d > ob.radius, axis=1)
    if keep_out is not None and predictions is not None and predictions.shape[0]:
        if math.isinf(keep_out) and keep_out > 0:
            ok[:] = False
        elif keep_out > 0:
            d = nearest_distances(pos, predictions[:, 1:])
            ok &= np.all(d > keep_out, axis=1)
    return ok


def select(cost: np.ndarray, clearance: np.ndarray, feasible: np.ndarray) -> int | None:
    """Argmin of cost over feasible candidates; ties go to larger clearance,
    then lower index.  None if nothing is feasible."""
    idx = np.nonzero(feasible)[0]
    if idx.size == 0:
        return None
    order = np.lexsort((idx, -clearance[idx], cost[idx]))
    return int(idx[order[0]])


def plan(
    robot: RobotState,
    goal,
    predictions: np.ndarray,
    lam: float,
    candidates: int = 128,
    limits: RobotLimits = RobotLimits(),
    horizon: int = 10,
    obstacles: Sequence[Obstacle] = (),
    keep_out: float | None = None,
    cands: CandidateSet | None = None,
) -> SplinePlan:
    """Pick the minimum-cost feasible rollout; brake-to-stop if none survive.

    ``predictions`` is (M, H + 1, 2).  ``keep_out`` adds the hard constraint
    used by the prediction-set (ACI) planner.
    """
    goal = np.asarray(goal, dtype=float)
    if goal.shape != (2,) or not np.all(np.isfinite(goal)):
        raise ValueError(f"goal must be a finite (x, y) pair, got {goal}")
    if not math.isfinite(lam):
        raise ValueError(f"lambda must be finite, got {lam}")
    if candidates < 1:
        raise ValueError("candidates must be >= 1")
    flags = set()
    if cands is None:
        cands = generate_candidates(robot, limits, horizon, candidates)
    if predictions.shape[0] == 0 and lam != 0:
        flags.add("no_predictions")
    cost, _, clearance = score_candidates(cands, goal, predictions, lam)
    ok = feasible_mask(cands, obstacles, predictions, keep_out)
    i = select(cost, clearance, ok)
    if i is None:
        flags.add("no_feasible_candidate")
        i = cands.brake_index
    return SplinePlan(cands.states[i].copy(), cands.speeds[i].copy(), float(cost[i]), float(clearance[i]), i, flags)


def nav_loss(robot_pos, pedestrians, clip: float) -> float:
    """Negative distance to the nearest pedestrian, floored at ``-clip``."""
    if not clip > 0:
        raise ValueError("clip must be positive")
    peds = np.asarray(pedestrians, dtype=float).reshape(-1, 2)
    if peds.shape[0] == 0:
        return -clip
    d = np.sqrt(((peds - np.asarray(robot_pos, dtype=float)) ** 2).sum(axis=1)).min()
    return max(-clip, -float(d))
