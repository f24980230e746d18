"""Conveyor-belt grasping simulator.

Belt speed ``lam`` in [0, 1].  Per epoch the robot attempts
``n ~ Poisson(C * sqrt(lam))`` grasps, of which ``d | n ~ Binomial(n, C' * lam)``
fail.  Loss is the failure ratio ``d / n`` (0 when ``n = 0``), utility is the
number of successful grasps ``n - d``.

Randomness is drawn by inversion from a per-seed Philox stream of uniforms, so
every policy sees the same noise for a given (seed, step): comparisons across
policies are paired.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .controller import LossDirection, RiskTrace, rollout, running_mean


class Policy(str, enum.Enum):
    CC = "cc"
    UCB = "ucb"
    LCB = "lcb"
    ORACLE_LOSS = "oracle_loss"
    ORACLE_VALUE = "oracle_value"


@dataclass(frozen=True)
class FactoryModel:
    c_rate: float = 10.0
    c_fail: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not self.c_rate > 0:
            raise ValueError(f"c_rate must be positive, got {self.c_rate}")
        if not 0 < self.c_fail <= 1:
            raise ValueError(f"c_fail must lie in (0, 1], got {self.c_fail}")

    def expected_loss(self, lam):
        """E[d/n | n > 0] = C' * lam."""
        return self.c_fail * np.asarray(lam)

    def expected_utility(self, lam):
        lam = np.asarray(lam)
        return self.c_rate * np.sqrt(lam) * (1 - self.c_fail * lam)


@dataclass(frozen=True)
class StepOutcome:
    n_items: int
    n_failed: int
    loss: float
    utility: int
    clamped: bool = False


@dataclass(frozen=True)
class FactoryConfig:
    policy: Policy = Policy.CC
    horizon: int = 2000
    epsilon: float = 0.05
    eta: float = 0.05
    lambda_init: float = 0.0
    arms: int = 21

    def __post_init__(self):
        object.__setattr__(self, "policy", Policy(self.policy))
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.arms < 2:
            raise ValueError("arms must be >= 2")


def uniforms(seed: int, horizon: int) -> np.ndarray:
    """(horizon, 2) uniforms for one seed; a prefix of any longer draw."""
    u = np.random.Generator(np.random.Philox(key=seed)).random((horizon, 2))
    return np.clip(u, 1e-300, None)


def _poisson_inverse(u, mu):
    mu = np.asarray(mu, dtype=float)
    m = float(np.max(mu, initial=0.0))
    kmax = int(math.ceil(m + 12 * math.sqrt(m) + 25))
    k = np.arange(0, kmax + 1)
    # log p_k = -mu + k log mu - log k!
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = -mu[..., None] + k * np.log(mu)[..., None] - np.concatenate(([0.0], np.cumsum(np.log(k[1:]))))
    logp[..., 0] = -mu
    cdf = np.cumsum(np.exp(logp), axis=-1)
    n = np.sum(cdf < u[..., None], axis=-1)
    return np.where(mu > 0, n, 0)


def sample_outcome(lam, u_count, u_fail, c_rate: float, c_fail: float):
    """Vectorized draw of (n, d) at speeds ``lam`` from uniforms."""
    lam = np.asarray(lam, dtype=float)
    n = _poisson_inverse(np.asarray(u_count), c_rate * np.sqrt(lam))
    d = stats.binom.ppf(u_fail, n, c_fail * lam)
    d = np.where(n > 0, d, 0).astype(int)
    return n.astype(int), d


def _loss(n, d):
    return np.where(n > 0, d / np.maximum(n, 1), 0.0)


def step(model: FactoryModel, lam: float, t: int = 0) -> StepOutcome:
    """One epoch at speed ``lam``; deterministic in (model.seed, t)."""
    clamped = not 0.0 <= lam <= 1.0
    lam = min(max(float(lam), 0.0), 1.0)
    u = uniforms(model.seed, t + 1)[t]
    n, d = sample_outcome(lam, u[0], u[1], model.c_rate, model.c_fail)
    n, d = int(n), int(d)
    return StepOutcome(n, d, float(_loss(n, d)), n - d, clamped)


def oracle_loss_speed(model: FactoryModel, epsilon: float) -> float:
    """Speed whose expected failure ratio equals ``epsilon``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    speed = epsilon / model.c_fail
    if speed > 1:
        warnings.warn(f"epsilon {epsilon} exceeds c_fail {model.c_fail}; speed saturated at 1")
        return 1.0
    return speed


def oracle_value_speed(model: FactoryModel, points: int = 10_000) -> float:
    """Speed maximizing expected successful grasps, by grid search on [0, 1]."""
    grid = np.linspace(0.0, 1.0, points)
    return float(grid[np.argmax(model.expected_utility(grid))])


@dataclass
class FactoryRun:
    """Per-seed traces, arrays of shape (seeds, horizon)."""

    policy: Policy
    seeds: list[int]
    lambdas: np.ndarray  # raw controller / bandit value before clamping
    speeds: np.ndarray  # speed actually played
    losses: np.ndarray
    utilities: np.ndarray
    n_items: np.ndarray
    clamped: np.ndarray

    @property
    def final_risk(self) -> np.ndarray:
        return self.losses.mean(axis=1)

    @property
    def mean_utility(self) -> np.ndarray:
        return self.utilities.mean(axis=1)

    def risk_trace(self, i: int) -> RiskTrace:
        return RiskTrace(self.lambdas[i], self.losses[i], running_mean(self.losses[i]), 0.0, 1.0)


def run_policy_batch(
    seeds: Sequence[int],
    config: FactoryConfig,
    c_rate: float = 10.0,
    c_fail: float = 0.2,
) -> FactoryRun:
    """Run one policy on many seeds at once (vectorized over seeds)."""
    seeds = list(seeds)
    S, T = len(seeds), config.horizon
    U = np.stack([uniforms(s, T) for s in seeds])  # (S, T, 2)
    model = FactoryModel(c_rate, c_fail)
    lambdas = np.empty((S, T))
    speeds = np.empty((S, T))
    losses = np.empty((S, T))
    n_all = np.empty((S, T), dtype=int)
    d_all = np.empty((S, T), dtype=int)

    def play(t, speed):
        n, d = sample_outcome(speed, U[:, t, 0], U[:, t, 1], c_rate, c_fail)
        n_all[:, t], d_all[:, t] = n, d
        speeds[:, t] = speed
        losses[:, t] = _loss(n, d)

    policy = config.policy
    if policy in (Policy.ORACLE_LOSS, Policy.ORACLE_VALUE):
        fixed = (
            oracle_loss_speed(model, config.epsilon)
            if policy is Policy.ORACLE_LOSS
            else oracle_value_speed(model)
        )
        for t in range(T):
            lambdas[:, t] = fixed
            play(t, np.full(S, fixed))
    elif policy is Policy.CC:
        lam = np.full(S, float(config.lambda_init))
        for t in range(T):
            lambdas[:, t] = lam
            play(t, np.clip(lam, 0.0, 1.0))
            # same arithmetic as controller.update, aggressive orientation
            lam = rollout(lam, config.eta, config.epsilon, losses[:, t : t + 1], LossDirection.AGGRESSIVE)[:, 1]
    else:
        arms = np.linspace(0.0, 1.0, config.arms)
        pulls = np.zeros((S, arms.size))
        totals = np.zeros((S, arms.size))
        rows = np.arange(S)
        for t in range(T):
            if t < arms.size:
                idx = np.full(S, t)
            else:
                means = totals / pulls
                bonus = np.sqrt(2 * np.log(t) / pulls)
                idx = np.argmax(means + bonus, axis=1) if policy is Policy.UCB else np.argmin(means - bonus, axis=1)
            lambdas[:, t] = arms[idx]
            play(t, arms[idx])
            reward = (n_all[:, t] - d_all[:, t]) if policy is Policy.UCB else losses[:, t]
            pulls[rows, idx] += 1
            totals[rows, idx] += reward
    return FactoryRun(
        policy,
        seeds,
        lambdas,
        speeds,
        losses,
        (n_all - d_all).astype(float),
        n_all,
        (lambdas < 0) | (lambdas > 1),
    )


def run_policy(model: FactoryModel, policy: Policy | str, horizon: int = 2000, epsilon: float = 0.05, eta: float = 0.05, **kw) -> tuple[RiskTrace, np.ndarray]:
    """Single-seed run: (RiskTrace, per-step utility)."""
    cfg = FactoryConfig(Policy(policy), horizon, epsilon, eta, **kw)
    run = run_policy_batch([model.seed], cfg, model.c_rate, model.c_fail)
    return run.risk_trace(0), run.utilities[0]
