import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conformal_decision.nav.dynamics import RobotLimits, RobotState, candidate_controls, check_feasible, rollout, wrap_angle


@given(st.floats(-100, 100))
def test_wrap_angle_range(theta):
    w = float(wrap_angle(theta))
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(theta), abs_tol=1e-9)


def test_straight_rollout():
    states = rollout(RobotState(0, 0, 0, 1.0), np.full((1, 5), 1.0), np.zeros(1), 0.2)
    assert states.shape == (1, 6, 3)
    assert np.allclose(states[0, :, 0], np.arange(6) * 0.2)
    assert np.allclose(states[0, :, 1:], 0)


def test_constant_turn_rollout_turns_left():
    states = rollout(RobotState(0, 0, 0, 1.0), np.full((1, 20), 1.0), np.array([1.0]), 0.1)
    assert states[0, -1, 1] > 0
    assert states[0, -1, 2] == pytest.approx(2.0)


@pytest.mark.parametrize("count", [1, 2, 8, 128])
def test_candidate_count_and_brake_last(count):
    speeds, omegas = candidate_controls(RobotState(0, 0, 0, 1.5), RobotLimits(), 10, count)
    assert speeds.shape == (count, 10) and omegas.shape == (count,)
    assert omegas[-1] == 0
    assert speeds[-1, -1] == 0.0
    assert np.all(np.diff(speeds[-1]) <= 0)


def test_lattice_includes_straight_ahead_at_full_speed():
    speeds, omegas = candidate_controls(RobotState(0, 0, 0, 2.0), RobotLimits(), 10, 128)
    assert np.any((omegas == 0) & (speeds[:, -1] == 2.0))
    # truncation removes the sharpest turns first
    assert np.abs(omegas).max() == 1.5 and 1.40625 in omegas and -1.40625 in omegas


def test_candidates_respect_limits():
    limits = RobotLimits(v_max=1.0, omega_max=0.5, a_max=1.0, dt=0.25)
    speeds, omegas = candidate_controls(RobotState(0, 0, 0, 0.2), limits, 8, 40)
    assert speeds.min() >= 0 and speeds.max() <= 1.0 + 1e-12
    assert np.abs(omegas).max() <= 0.5
    steps = np.diff(np.concatenate([np.full((40, 1), 0.2), speeds], axis=1), axis=1)
    assert np.abs(steps).max() <= 0.25 + 1e-12


@given(
    st.floats(-10, 10), st.floats(-10, 10), st.floats(-4, 4), st.floats(0, 3),
    st.integers(1, 60), st.integers(1, 15),
)
def test_every_candidate_is_dynamically_feasible(x, y, th, v0, count, horizon):
    limits = RobotLimits()
    robot = RobotState(x, y, th, v0)
    speeds, omegas = candidate_controls(robot, limits, horizon, count)
    states = rollout(robot, speeds, omegas, limits.dt)
    for i in range(count):
        assert check_feasible(states[i], speeds[i], v0, limits)


def test_check_feasible_rejects_teleport():
    limits = RobotLimits()
    robot = RobotState(0, 0, 0, 1.0)
    speeds = np.full((1, 3), 1.0)
    states = rollout(robot, speeds, np.zeros(1), limits.dt)[0]
    states[2, 0] += 0.5
    assert not check_feasible(states, speeds[0], 1.0, limits)
    assert not check_feasible(rollout(robot, np.full((1, 3), 5.0), np.zeros(1), limits.dt)[0], np.full(3, 5.0), 1.0, limits)


def test_state_validation():
    with pytest.raises(ValueError):
        RobotState(0, 0, 0, -1)
    with pytest.raises(ValueError):
        RobotState(math.nan, 0)
    with pytest.raises(ValueError):
        RobotLimits(v_max=0)
    assert RobotState(0, 0, 3 * math.pi).heading == pytest.approx(math.pi)
