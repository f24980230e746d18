import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conformal_decision.nav.dynamics import RobotLimits, RobotState, check_feasible
from conformal_decision.nav.planner import (
    Obstacle,
    feasible_mask,
    generate_candidates,
    nav_loss,
    plan,
    score_candidates,
)
from oracles import brute_force_argmin, brute_force_costs

LIMITS = RobotLimits()
H = 10


def static_predictions(points, horizon=H):
    return np.repeat(np.asarray(points, dtype=float)[:, None, :], horizon + 1, axis=1)


def test_zero_lambda_minimizes_goal_distance():
    robot = RobotState(0, 0, 0, 2.0)
    goal = (20.0, 0.0)
    p = plan(robot, goal, static_predictions([(3.0, 0.0)]), 0.0)
    cands = generate_candidates(robot, LIMITS, H, 128)
    _, goal_term, _ = score_candidates(cands, goal, np.empty((0, H + 1, 2)), 0.0)
    assert p.index == int(np.argmin(goal_term))
    assert np.allclose(p.states[:, 1], 0.0)  # straight ahead


def test_large_lambda_maximizes_clearance():
    robot = RobotState(0, 0, 0, 2.0)
    preds = static_predictions([(2.5, 0.0)])
    p = plan(robot, (20.0, 0.0), preds, 1e6)
    cands = generate_candidates(robot, LIMITS, H, 128)
    _, _, clearance = score_candidates(cands, (20.0, 0.0), preds, 1e6)
    assert p.clearance == pytest.approx(clearance.max())


def test_eight_candidates_two_pedestrians_match_brute_force():
    robot = RobotState(1.0, -0.5, 0.3, 1.2)
    start = np.array([[4.0, 0.0], [3.0, 2.0]])
    vel = np.array([[-0.2, 0.1], [0.0, -0.3]])
    preds = np.stack([start + vel * k for k in range(H + 1)], axis=1)
    cands = generate_candidates(robot, LIMITS, H, 8)
    p = plan(robot, (10.0, 3.0), preds, 3.0, candidates=8)
    assert p.index == brute_force_argmin(cands.states, (10.0, 3.0), preds, 3.0)
    costs, clear = brute_force_costs(cands.states, (10.0, 3.0), preds, 3.0)
    cost, _, clearance = score_candidates(cands, (10.0, 3.0), preds, 3.0)
    assert np.allclose(cost, costs) and np.allclose(clearance, clear)


scene = st.tuples(
    st.floats(-3, 3), st.floats(-3, 3), st.floats(-math.pi, math.pi), st.floats(0, 2),
    st.lists(st.tuples(st.floats(-6, 6), st.floats(-6, 6), st.floats(-1, 1), st.floats(-1, 1)), min_size=1, max_size=4),
)


def _unpack(sc):
    x, y, th, v, peds = sc
    robot = RobotState(x, y, th, v)
    preds = np.stack(
        [np.stack([(px + vx * k * 0.2, py + vy * k * 0.2) for k in range(H + 1)]) for px, py, vx, vy in peds]
    )
    return robot, preds


@given(scene, st.floats(0, 50), st.integers(2, 40))
def test_argmin_matches_brute_force(sc, lam, count):
    robot, preds = _unpack(sc)
    cands = generate_candidates(robot, LIMITS, H, count)
    p = plan(robot, (8.0, 1.0), preds, lam, candidates=count, cands=cands)
    ref = brute_force_argmin(cands.states, (8.0, 1.0), preds, lam)
    costs, _ = brute_force_costs(cands.states, (8.0, 1.0), preds, lam)
    # floating ties can resolve either way; the chosen cost must be minimal
    assert p.index == ref or math.isclose(costs[p.index], costs[ref], rel_tol=1e-12, abs_tol=1e-9)


@given(scene, st.lists(st.floats(0, 100), min_size=2, max_size=6))
def test_clearance_nondecreasing_in_lambda(sc, lams):
    robot, preds = _unpack(sc)
    cands = generate_candidates(robot, LIMITS, H, 64)
    clear = [plan(robot, (8.0, 1.0), preds, lam, cands=cands).clearance for lam in sorted(lams)]
    assert all(b >= a - 1e-9 for a, b in zip(clear, clear[1:]))


@given(scene, st.floats(0, 50), st.one_of(st.none(), st.floats(0, 3)))
def test_returned_plan_is_feasible(sc, lam, keep_out):
    robot, preds = _unpack(sc)
    p = plan(robot, (8.0, 1.0), preds, lam, candidates=32, keep_out=keep_out)
    assert check_feasible(p.states, p.speeds, robot.speed, LIMITS)


def test_no_predictions_flag():
    p = plan(RobotState(0, 0), (5.0, 0.0), np.empty((0, H + 1, 2)), 4.0)
    assert "no_predictions" in p.flags
    assert "no_predictions" not in plan(RobotState(0, 0), (5.0, 0.0), np.empty((0, H + 1, 2)), 0.0).flags


@pytest.mark.parametrize("goal", [(math.nan, 0.0), (math.inf, 1.0)])
def test_non_finite_goal_rejected(goal):
    with pytest.raises(ValueError, match="goal"):
        plan(RobotState(0, 0), goal, np.empty((0, H + 1, 2)), 0.0)


def test_infinite_keep_out_brakes():
    robot = RobotState(0, 0, 0, 1.0)
    p = plan(robot, (5.0, 0.0), static_predictions([(9.0, 9.0)]), 0.0, keep_out=math.inf)
    assert "no_feasible_candidate" in p.flags
    assert p.index == 127 and p.speeds[-1] == 0.0


def test_empty_set_radius_means_no_constraint():
    robot = RobotState(0, 0, 0, 1.0)
    preds = static_predictions([(1.0, 0.0)])
    free = plan(robot, (5.0, 0.0), preds, 0.0)
    for ko in (-math.inf, 0.0):
        assert plan(robot, (5.0, 0.0), preds, 0.0, keep_out=ko).index == free.index


def test_keep_out_disc_is_respected():
    robot = RobotState(0, 0, 0, 1.0)
    preds = static_predictions([(2.0, 0.0)])
    p = plan(robot, (5.0, 0.0), preds, 0.0, keep_out=1.0)
    assert np.all(np.hypot(p.states[1:, 0] - 2.0, p.states[1:, 1]) > 1.0) or "no_feasible_candidate" in p.flags


def test_static_obstacle_mask():
    robot = RobotState(0, 0, 0, 2.0)
    cands = generate_candidates(robot, LIMITS, H, 32)
    ok = feasible_mask(cands, [Obstacle(2.0, 0.0, 0.5)])
    assert not ok.all() and ok.any()
    assert ok[-1] or np.any(np.hypot(cands.states[-1, 1:, 0] - 2.0, cands.states[-1, 1:, 1]) <= 0.5)


@pytest.mark.parametrize(
    "peds, expected",
    [([(3.0, 4.0)], -5.0), ([(1.0, 0.0), (0.0, 2.0)], -1.0), ([(500.0, 0.0)], -100.0), ([], -100.0)],
)
def test_nav_loss_examples(peds, expected):
    assert nav_loss((0.0, 0.0), peds, clip=100.0) == expected


def test_nav_loss_needs_positive_clip():
    with pytest.raises(ValueError):
        nav_loss((0, 0), [(1, 1)], 0.0)
