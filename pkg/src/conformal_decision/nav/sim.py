"""Closed-loop navigation episodes."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..aci import AciState, ScoreWindow, aci_update
from ..controller import ControllerState, LossDirection, RiskTrace, update
from .dynamics import RobotLimits, RobotState
from .planner import generate_candidates, nav_loss, plan
from .predictor import PedestrianSet, predict
from .scenario import NavScenario, PedestrianScript, build_script

TRACE_COLUMNS = ("t", "x", "y", "theta", "lambda", "loss", "min_dist", "risk")
METRIC_COLUMNS = ("success", "time_s", "safe", "min_dist", "avg_dist", "q05", "q10", "q25", "q50")


@dataclass
class EpisodeMetrics:
    success: bool
    time_s: float  # inf when the goal was not reached
    safe: bool
    min_dist: float
    avg_dist: float
    q05: float
    q10: float
    q25: float
    q50: float
    steps: int = 0
    collision_steps: int = 0
    close_steps: int = 0  # steps nearer than the distance target

    def as_dict(self) -> dict:
        return asdict(self)


def metrics_from_distances(distances, success: bool, time_s: float, collision_radius: float, close_radius: float) -> EpisodeMetrics:
    d = np.asarray([x for x in distances if math.isfinite(x)], dtype=float)
    if d.size:
        q = np.quantile(d, [0.05, 0.10, 0.25, 0.50])
        stats = (float(d.min()), float(d.mean()), *map(float, q))
    else:
        stats = (math.inf,) * 6
    return EpisodeMetrics(
        success=success,
        time_s=time_s,
        safe=bool(np.all(d >= collision_radius)),
        min_dist=stats[0],
        avg_dist=stats[1],
        q05=stats[2],
        q10=stats[3],
        q25=stats[4],
        q50=stats[5],
        steps=len(distances),
        collision_steps=int(np.sum(d < collision_radius)),
        close_steps=int(np.sum(d < close_radius)),
    )


@dataclass
class StepRecord:
    """Everything needed to re-score one planning decision offline."""

    robot: RobotState
    predictions: np.ndarray
    lam: float
    keep_out: float | None
    states: np.ndarray
    chosen: int


@dataclass
class EpisodeResult:
    metrics: EpisodeMetrics
    trace: RiskTrace
    rows: list
    records: list = field(default_factory=list)


def _planner_lambda(sc: NavScenario, lam: float) -> float:
    if sc.planner == "aggressive" or sc.planner == "aci":
        return 0.0
    if sc.planner == "conservative":
        return sc.lambda_max
    # negative weights would reward proximity; the decision layer floors at 0
    return min(max(lam, 0.0), sc.lambda_max)


def run_episode(sc: NavScenario, script: PedestrianScript | None = None, record: bool = False, base_dir: Path | None = None) -> EpisodeResult:
    """Simulate one episode: predict, plan, move, observe, update."""
    if script is None:
        script = build_script(sc, base_dir)
    limits = RobotLimits(sc.v_max, sc.omega_max, sc.a_max, sc.dt)
    clip = sc.loss_clip
    goal = np.asarray(sc.goal, dtype=float)
    robot = RobotState(*sc.start, sc.start_heading, 0.0)
    peds = PedestrianSet(history_len=sc.ar_window + 1)
    peds.observe(script.at(0))

    ctrl = None
    # eta = 0 means no adaptation: lambda stays at lambda_init
    if sc.planner == "conformal" and sc.eta > 0:
        ctrl = ControllerState(sc.lambda_init, sc.eta, sc.epsilon, LossDirection.CONSERVATIVE, -clip, 0.0)
    aci = AciState(sc.aci_alpha, sc.aci_alpha, sc.aci_eta) if sc.planner == "aci" else None
    window = ScoreWindow(sc.aci_window)
    pending: deque = deque()  # (step, {pid: path}, radius) awaiting H observations

    lam_const = {"aggressive": 0.0, "conservative": sc.lambda_max}.get(sc.planner, sc.lambda_init)
    lambdas, losses, distances, rows, records = [], [], [], [], []
    success, time_s = False, math.inf
    n_steps = sc.max_steps
    if sc.sdd_path is not None:
        n_steps = min(n_steps, len(script) - 1)

    for k in range(n_steps):
        bundle = predict(peds, sc.horizon, sc.ar_order, sc.ar_window)
        preds = bundle.array()
        if ctrl is not None:
            lam = ctrl.lam
        elif aci is not None:
            lam = aci.alpha_t
        else:
            lam = lam_const
        keep_out = None
        if aci is not None:
            keep_out = window.radius(aci.alpha_t)
            pending.append((k, dict(bundle.paths), keep_out))
        cands = generate_candidates(robot, limits, sc.horizon, sc.candidates)
        p = plan(robot, goal, preds, _planner_lambda(sc, lam), sc.candidates, limits, sc.horizon, sc.obstacles, keep_out, cands)
        if record:
            records.append(StepRecord(robot, preds, _planner_lambda(sc, lam), keep_out, cands.states, p.index))

        x, y, th = p.states[1]
        robot = RobotState(float(x), float(y), float(th), float(p.speeds[0]))
        frame = script.at(k + 1)
        peds.observe(frame)
        positions = peds.positions()
        loss = nav_loss(robot.position, positions, clip)
        dist = (
            float(np.sqrt(((positions - robot.position) ** 2).sum(axis=1)).min())
            if len(positions)
            else math.inf
        )
        lambdas.append(lam)
        losses.append(loss)
        distances.append(dist)
        if ctrl is not None:
            ctrl = update(ctrl, loss)
            risk = ctrl.risk
        else:
            risk = math.fsum(losses) / len(losses)
        if aci is not None:
            aci = _aci_feedback(aci, pending, window, script, k + 1, sc.horizon)
        rows.append((k + 1, robot.x, robot.y, robot.heading, lam, loss, dist, risk))
        if np.hypot(*(robot.position - goal)) <= sc.goal_tolerance:
            success, time_s = True, (k + 1) * sc.dt
            break

    trace = RiskTrace.from_losses(lambdas, losses, -clip, 0.0, lambda_next=ctrl.lam if ctrl else None)
    metrics = metrics_from_distances(distances, success, time_s, sc.collision_radius, abs(sc.epsilon))
    return EpisodeResult(metrics, trace, rows, records)


def _aci_feedback(aci: AciState, pending: deque, window: ScoreWindow, script: PedestrianScript, now: int, horizon: int) -> AciState:
    """Score the prediction made ``horizon`` steps ago and update alpha.

    The score of a pedestrian is its worst displacement error over the
    horizon; the set covered if every score is within the radius in use then.
    """
    while pending and pending[0][0] + horizon <= now:
        made, paths, radius = pending.popleft()
        scores = []
        for pid, path in paths.items():
            actual = [script.at(made + j).get(pid) for j in range(1, horizon + 1)]
            if any(a is None for a in actual):
                continue
            scores.append(max(float(np.hypot(*(path[j] - actual[j - 1]))) for j in range(1, horizon + 1)))
        if not scores:
            continue
        covered = all(s <= radius for s in scores)
        aci = aci_update(aci, covered)
        window.push(scores)
    return aci
