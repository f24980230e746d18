"""Unicycle/Dubins kinematics with bounded speed, turn rate and acceleration."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def wrap_angle(theta):
    """Wrap to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(theta, dtype=float), 2 * np.pi)


@dataclass(frozen=True)
class RobotLimits:
    v_max: float = 2.0
    omega_max: float = 1.5
    a_max: float = 2.0
    dt: float = 0.2

    def __post_init__(self):
        for name in ("v_max", "omega_max", "a_max", "dt"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value}")


@dataclass(frozen=True)
class RobotState:
    x: float
    y: float
    heading: float = 0.0
    speed: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.heading, self.speed)):
            raise ValueError("robot state must be finite")
        if self.speed < 0:
            raise ValueError(f"speed must be non-negative, got {self.speed}")
        object.__setattr__(self, "heading", float(wrap_angle(self.heading)))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


def speed_profile(v0: float, targets: np.ndarray, horizon: int, limits: RobotLimits) -> np.ndarray:
    """Per-step speeds ramping from ``v0`` toward each target at ``a_max``.

    Returns shape (len(targets), horizon).
    """
    dv = limits.a_max * limits.dt
    out = np.empty((len(targets), horizon))
    v = np.full(len(targets), min(max(v0, 0.0), limits.v_max))
    for k in range(horizon):
        v = v + np.clip(targets - v, -dv, dv)
        out[:, k] = v
    return out


def rollout(state: RobotState, speeds: np.ndarray, omegas: np.ndarray, dt: float) -> np.ndarray:
    """Integrate controls; ``speeds`` (C, H), ``omegas`` (C,) or (C, H).

    Returns states (C, H + 1, 3) as (x, y, heading).
    """
    speeds = np.atleast_2d(speeds)
    C, H = speeds.shape
    omegas = np.broadcast_to(np.asarray(omegas, dtype=float).reshape(C, -1), (C, H))
    out = np.empty((C, H + 1, 3))
    out[:, 0] = (state.x, state.y, state.heading)
    for k in range(H):
        th = out[:, k, 2]
        out[:, k + 1, 0] = out[:, k, 0] + speeds[:, k] * np.cos(th) * dt
        out[:, k + 1, 1] = out[:, k, 1] + speeds[:, k] * np.sin(th) * dt
        out[:, k + 1, 2] = wrap_angle(th + omegas[:, k] * dt)
    return out


def candidate_controls(state: RobotState, limits: RobotLimits, horizon: int, count: int):
    """Deterministic control set: a (turn rate x target speed) lattice plus brake.

    The last candidate is always brake-to-stop (full deceleration, no turn).
    Returns (speeds (count, H), omegas (count,)).
    """
    if count < 1:
        raise ValueError("need at least one candidate")
    m = count - 1
    n_v = min(4, m) if m else 0
    n_w = math.ceil(m / n_v) if m else 0
    targets = limits.v_max * np.arange(1, n_v + 1) / max(n_v, 1)
    # odd count so driving straight is always available; gentlest turns first
    # so truncation to ``count`` drops the sharpest ones
    n_w += 1 - n_w % 2 if n_w else 0
    omegas = np.linspace(-limits.omega_max, limits.omega_max, n_w) if n_w > 1 else np.zeros(n_w)
    omegas = sorted(omegas, key=lambda w: (abs(w), w))
    pairs = [(v, w) for w in omegas for v in targets][:m]
    pairs.append((0.0, 0.0))
    tv = np.array([p[0] for p in pairs])
    ws = np.array([p[1] for p in pairs])
    return speed_profile(state.speed, tv, horizon, limits), ws


def check_feasible(states: np.ndarray, speeds: np.ndarray, v0: float, limits: RobotLimits, tol: float = 1e-9) -> bool:
    """Check one plan against the kinematic model step by step."""
    states = np.asarray(states)
    speeds = np.asarray(speeds)
    dt = limits.dt
    if np.any(speeds < -tol) or np.any(speeds > limits.v_max + tol):
        return False
    prev = min(max(v0, 0.0), limits.v_max)
    for k in range(len(speeds)):
        if abs(speeds[k] - prev) > limits.a_max * dt + tol:
            return False
        prev = speeds[k]
        x, y, th = states[k]
        expect = (x + speeds[k] * math.cos(th) * dt, y + speeds[k] * math.sin(th) * dt)
        if abs(states[k + 1, 0] - expect[0]) > tol or abs(states[k + 1, 1] - expect[1]) > tol:
            return False
        if abs(wrap_angle(states[k + 1, 2] - th)) > limits.omega_max * dt + tol:
            return False
    return True
