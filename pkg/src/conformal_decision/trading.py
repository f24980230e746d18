"""Hourly stock-trading simulator.

Returns follow ``r_t = mu*dt + sigma*sqrt(dt)*Z_t`` and the predictor sees
``r_hat_t = mu*dt + sigma*sqrt(dt)*W_t`` with ``corr(W, Z) = rho``.  The agent
builds a normal-quantile interval around ``r_hat`` whose width is set by
``lam`` and buys / short-sells only when the whole interval is on one side of
zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import ndtri

from .controller import LossDirection, RiskTrace, rollout, running_mean


class Strategy(str, enum.Enum):
    CC = "cc"
    ACI = "aci"
    BUY_HOLD = "buy_hold"
    GREEDY = "greedy"


@dataclass(frozen=True)
class MarketModel:
    mu: float = 0.08
    sigma: float = 0.2
    rho: float = 0.1
    steps_per_year: int = 252 * 7
    years: int = 5
    seed: int = 0

    def __post_init__(self):
        if not -1 <= self.rho <= 1:
            raise ValueError(f"rho must lie in [-1, 1], got {self.rho}")
        if self.years < 1:
            raise ValueError("years must be >= 1")
        if self.steps_per_year < 1:
            raise ValueError("steps_per_year must be >= 1")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def delta(self) -> float:
        return 1.0 / self.steps_per_year

    @property
    def scale(self) -> float:
        """Per-step return standard deviation sigma * sqrt(dt)."""
        return self.sigma * math.sqrt(self.delta)

    @property
    def horizon(self) -> int:
        return self.steps_per_year * self.years


def simulate_paths(model: MarketModel) -> tuple[np.ndarray, np.ndarray]:
    """Realized and predicted returns, deterministic in ``model.seed``."""
    rng = np.random.Generator(np.random.Philox(key=model.seed))
    z = rng.standard_normal(model.horizon)
    xi = rng.standard_normal(model.horizon)
    if model.rho == 1:
        w = z
    elif model.rho == -1:
        w = -z
    else:
        w = model.rho * z + math.sqrt(1 - model.rho**2) * xi
    drift = model.mu * model.delta
    return drift + model.scale * z, drift + model.scale * w


class Interval(NamedTuple):
    """Prediction interval; ``lo > hi`` marks the empty set around ``center``."""

    lo: float
    hi: float
    center: float

    @property
    def empty(self) -> bool:
        return self.lo > self.hi

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo, -self.center)


def interval(r_hat, lam, sigma: float, delta: float):
    """Interval ``[r_hat + s*z(lam/2), r_hat + s*z(1 - lam/2)]``, ``s = sigma*sqrt(delta)``.

    ``lam <= 0`` gives the whole line; ``lam = 1`` collapses to ``r_hat``;
    ``lam > 1`` would invert the quantiles and is returned as the empty set.
    Works elementwise on arrays (then returns arrays inside the tuple).
    """
    r_hat = np.asarray(r_hat, dtype=float)
    lam = np.asarray(lam, dtype=float)
    s = sigma * math.sqrt(delta)
    half = np.clip(lam, 0.0, 1.0) / 2
    with np.errstate(divide="ignore"):
        lo = r_hat + s * ndtri(half)
        hi = r_hat + s * ndtri(1 - half)
    lo = np.where(lam <= 0, -np.inf, np.where(lam > 1, np.inf, lo))
    hi = np.where(lam <= 0, np.inf, np.where(lam > 1, -np.inf, hi))
    if lo.ndim == 0:
        return Interval(float(lo), float(hi), float(r_hat))
    return Interval(lo, hi, r_hat)


def decide(iv: Interval):
    """1 (buy) if the set is above zero, -1 (short) if below, else 0.

    The empty set degenerates to trading on the sign of the point prediction.
    """
    lo, hi, center = (np.asarray(x, dtype=float) for x in iv)
    action = np.where(lo > 0, 1, np.where(hi < 0, -1, 0))
    action = np.where(lo > hi, np.sign(center).astype(int), action)
    return int(action) if action.ndim == 0 else action


def trade_loss(u, r, clip: float):
    """Money lost by position ``u`` on return ``r``, clipped to ``[0, clip]``."""
    if not clip > 0:
        raise ValueError("clip must be positive")
    loss = np.minimum(clip, np.maximum(0.0, -np.asarray(u) * np.asarray(r)))
    return float(loss) if np.ndim(loss) == 0 else loss


@dataclass(frozen=True)
class TradingConfig:
    strategy: Strategy = Strategy.CC
    epsilon_yearly: float = 0.25
    eta: float = 20.0
    lambda_init: float = 0.0
    clip_sigmas: float = 5.0
    aci_alpha: float = 0.10
    aci_eta: float = 0.005

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if not self.epsilon_yearly > 0:
            raise ValueError("epsilon_yearly must be positive")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.aci_eta < 0:
            raise ValueError("aci_eta must be non-negative")
        if not 0 < self.aci_alpha < 1:
            raise ValueError("aci_alpha must lie in (0, 1)")
        if not self.clip_sigmas > 0:
            raise ValueError("clip_sigmas must be positive")


@dataclass
class TradingRun:
    """Arrays of shape (seeds, horizon)."""

    strategy: Strategy
    seeds: list[int]
    steps_per_year: int
    r: np.ndarray
    r_hat: np.ndarray
    lambdas: np.ndarray
    actions: np.ndarray
    losses: np.ndarray
    clip: float

    @property
    def returns(self) -> np.ndarray:
        return self.actions * self.r

    def yearly(self, values: np.ndarray) -> np.ndarray:
        """Sums over calendar-year windows, shape (seeds, years)."""
        S, T = values.shape
        return values.reshape(S, T // self.steps_per_year, self.steps_per_year).sum(axis=2)

    @property
    def mean_yearly_loss(self) -> np.ndarray:
        return self.yearly(self.losses).mean(axis=1)

    @property
    def mean_yearly_return(self) -> np.ndarray:
        return self.yearly(self.returns).mean(axis=1)

    def risk_trace(self, i: int) -> RiskTrace:
        return RiskTrace(self.lambdas[i], self.losses[i], running_mean(self.losses[i]), 0.0, self.clip)


def run_strategy_batch(seeds: Sequence[int], market: MarketModel, config: TradingConfig) -> TradingRun:
    """Run one strategy on many seeds; seed ``s`` always sees the same path."""
    seeds = list(seeds)
    paths = [simulate_paths(MarketModel(market.mu, market.sigma, market.rho, market.steps_per_year, market.years, s)) for s in seeds]
    r = np.stack([p[0] for p in paths])
    r_hat = np.stack([p[1] for p in paths])
    S, T = r.shape
    clip = config.clip_sigmas * market.scale
    eps_step = config.epsilon_yearly / market.steps_per_year
    lambdas = np.full((S, T), np.nan)
    actions = np.zeros((S, T), dtype=int)
    losses = np.zeros((S, T))
    strategy = config.strategy

    if strategy is Strategy.BUY_HOLD:
        actions[:] = 1
        losses = trade_loss(actions, r, clip)
    elif strategy is Strategy.GREEDY:
        lambdas[:] = 1.0
        actions = np.sign(r_hat).astype(int)
        losses = trade_loss(actions, r, clip)
    elif strategy is Strategy.CC:
        lam = np.full(S, float(config.lambda_init))
        for t in range(T):
            lambdas[:, t] = lam
            actions[:, t] = decide(interval(r_hat[:, t], lam, market.sigma, market.delta))
            losses[:, t] = trade_loss(actions[:, t], r[:, t], clip)
            lam = rollout(lam, config.eta, eps_step, losses[:, t : t + 1], LossDirection.AGGRESSIVE)[:, 1]
    else:
        alpha = np.full(S, config.aci_alpha)
        for t in range(T):
            lambdas[:, t] = alpha
            iv = interval(r_hat[:, t], alpha, market.sigma, market.delta)
            actions[:, t] = decide(iv)
            losses[:, t] = trade_loss(actions[:, t], r[:, t], clip)
            err = ~((iv.lo <= r[:, t]) & (r[:, t] <= iv.hi))
            alpha = alpha + config.aci_eta * (config.aci_alpha - err)
    return TradingRun(strategy, seeds, market.steps_per_year, r, r_hat, lambdas, actions, losses, clip)


def run_strategy(model: MarketModel, strategy: Strategy | str, epsilon_yearly: float = 0.25, eta: float = 20.0, clip_sigmas: float = 5.0, **kw):
    """Single path: (cumulative return, cumulative loss, RiskTrace)."""
    cfg = TradingConfig(Strategy(strategy), epsilon_yearly, eta, clip_sigmas=clip_sigmas, **kw)
    run = run_strategy_batch([model.seed], model, cfg)
    return np.cumsum(run.returns[0]), np.cumsum(run.losses[0]), run.risk_trace(0)
