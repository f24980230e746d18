"""Online conformal controller.

The controller tunes a scalar conservatism parameter ``lam`` so that the
running mean of realized decision losses stays at or below a target risk.
Everything here works on a *declared* loss range ``[loss_lo, loss_hi]`` rather
than assuming ``[0, 1]``; the bounds reduce to the unit-range forms when the
defaults are used.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "LossDirection",
    "ControllerState",
    "SafetyEnvelope",
    "RiskTrace",
    "update",
    "rollout",
    "run_controller",
    "empirical_risk",
    "theorem_bound",
    "lemma_floor",
    "telescoping_risk",
    "remark_bound",
    "max_step",
]


class LossDirection(str, enum.Enum):
    """Which way ``lam`` moves when the realized loss exceeds the target."""

    AGGRESSIVE = "higher_lambda_more_aggressive"
    CONSERVATIVE = "higher_lambda_more_conservative"

    @classmethod
    def parse(cls, value: "LossDirection | str") -> "LossDirection":
        if isinstance(value, cls):
            return value
        aliases = {"aggressive": cls.AGGRESSIVE, "conservative": cls.CONSERVATIVE}
        if value in aliases:
            return aliases[value]
        return cls(value)

    @property
    def sign(self) -> float:
        return 1.0 if self is LossDirection.AGGRESSIVE else -1.0

    def is_safe(self, lam: float, lambda_safe: float) -> bool:
        """True when ``lam`` sits on the safe side of ``lambda_safe``."""
        if self is LossDirection.AGGRESSIVE:
            return lam <= lambda_safe
        return lam >= lambda_safe


def _step(lam, eta, epsilon, loss, direction: LossDirection):
    # Both branches keep the exact arithmetic form lam + eta * (a - b) so that
    # the indicator-loss case is bit-identical to the ACI update.
    if direction is LossDirection.AGGRESSIVE:
        return lam + eta * (epsilon - loss)
    return lam + eta * (loss - epsilon)


def _check_range(loss_lo: float, loss_hi: float) -> None:
    if not (math.isfinite(loss_lo) and math.isfinite(loss_hi)) or loss_lo >= loss_hi:
        raise ValueError(f"invalid loss range [{loss_lo}, {loss_hi}]")


@dataclass(frozen=True)
class ControllerState:
    """Immutable controller state; :func:`update` returns a new one.

    ``cum_loss`` is kept with Neumaier compensation so the running risk stays
    exact to ~1 ulp even after millions of steps.
    """

    lam: float
    eta: float
    epsilon: float
    direction: LossDirection = LossDirection.AGGRESSIVE
    loss_lo: float = 0.0
    loss_hi: float = 1.0
    t: int = 0
    lambda_init: float | None = None
    _sum: float = field(default=0.0, repr=False)
    _comp: float = field(default=0.0, repr=False)

    def __post_init__(self):
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ValueError(f"eta must be a positive finite number, got {self.eta}")
        if not math.isfinite(self.lam):
            raise ValueError(f"lambda must be finite, got {self.lam}")
        if not math.isfinite(self.epsilon):
            raise ValueError(f"epsilon must be finite, got {self.epsilon}")
        _check_range(self.loss_lo, self.loss_hi)
        object.__setattr__(self, "direction", LossDirection.parse(self.direction))
        if self.lambda_init is None:
            object.__setattr__(self, "lambda_init", self.lam)

    @property
    def cum_loss(self) -> float:
        return self._sum + self._comp

    @property
    def risk(self) -> float:
        return self.cum_loss / self.t if self.t else 0.0


def update(state: ControllerState, loss: float) -> ControllerState:
    """Apply one controller step for an observed ``loss``."""
    loss = float(loss)
    if not math.isfinite(loss):
        raise ValueError(f"loss must be finite, got {loss}")
    if loss < state.loss_lo or loss > state.loss_hi:
        raise ValueError(
            f"loss {loss} outside declared range [{state.loss_lo}, {state.loss_hi}]"
        )
    total = state._sum + loss
    if abs(state._sum) >= abs(loss):
        comp = state._comp + ((state._sum - total) + loss)
    else:
        comp = state._comp + ((loss - total) + state._sum)
    return replace(
        state,
        lam=_step(state.lam, state.eta, state.epsilon, loss, state.direction),
        t=state.t + 1,
        _sum=total,
        _comp=comp,
    )


def rollout(lambda_1, eta, epsilon, losses, direction=LossDirection.AGGRESSIVE):
    """Controller trajectory for a fixed loss sequence.

    ``losses`` has time on its last axis; ``lambda_1``, ``eta`` and ``epsilon``
    broadcast against the remaining axes, so thousands of independent runs can
    be advanced together.  Returns ``lam`` with shape ``(..., T + 1)`` where
    index ``t`` holds lambda_{t+1}.  No range checks; see :func:`update`.
    """
    direction = LossDirection.parse(direction)
    losses = np.asarray(losses, dtype=float)
    batch = np.broadcast_shapes(
        losses.shape[:-1], np.shape(lambda_1), np.shape(eta), np.shape(epsilon)
    )
    lam = np.empty(batch + (losses.shape[-1] + 1,))
    lam[..., 0] = lambda_1
    eta = np.asarray(eta, dtype=float)
    epsilon = np.asarray(epsilon, dtype=float)
    for t in range(losses.shape[-1]):
        lam[..., t + 1] = _step(lam[..., t], eta, epsilon, losses[..., t], direction)
    return lam


@dataclass(frozen=True)
class SafetyEnvelope:
    """Eventual-safety certificate for an environment.

    Holding ``lam`` on the safe side of ``lambda_safe`` for ``k_horizon``
    consecutive steps forces the mean loss over those steps to at most
    ``epsilon_safe``.
    """

    lambda_safe: float
    epsilon_safe: float
    k_horizon: int = 1

    def __post_init__(self):
        if int(self.k_horizon) != self.k_horizon or self.k_horizon < 1:
            raise ValueError(f"k_horizon must be an integer >= 1, got {self.k_horizon}")


@dataclass
class RiskTrace:
    """Per-step record of (lambda_t, loss_t, risk_t), ``t = 1..T``."""

    lambdas: np.ndarray
    losses: np.ndarray
    risks: np.ndarray
    loss_lo: float = 0.0
    loss_hi: float = 1.0
    lambda_next: float | None = None

    def __post_init__(self):
        self.lambdas = np.asarray(self.lambdas, dtype=float)
        self.losses = np.asarray(self.losses, dtype=float)
        self.risks = np.asarray(self.risks, dtype=float)
        if not (len(self.lambdas) == len(self.losses) == len(self.risks)):
            raise ValueError("lambdas, losses and risks must have equal length")

    def __len__(self) -> int:
        return len(self.losses)

    @classmethod
    def from_losses(
        cls,
        lambdas: Sequence[float],
        losses: Sequence[float],
        loss_lo: float = 0.0,
        loss_hi: float = 1.0,
        lambda_next: float | None = None,
    ) -> "RiskTrace":
        losses = np.asarray(losses, dtype=float)
        if np.any(losses < loss_lo) or np.any(losses > loss_hi):
            raise ValueError(f"losses outside declared range [{loss_lo}, {loss_hi}]")
        return cls(lambdas, losses, running_mean(losses), loss_lo, loss_hi, lambda_next)

    def to_csv(self, path: str | Path | None = None) -> str:
        """Serialize as ``t,lambda,loss,risk`` with 17 significant digits."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "lambda", "loss", "risk"])
        for i, (lam, loss, risk) in enumerate(zip(self.lambdas, self.losses, self.risks)):
            writer.writerow([i + 1, fmt(lam), fmt(loss), fmt(risk)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path: str | Path, loss_lo: float = -math.inf, loss_hi: float = math.inf):
        return cls.parse_csv(Path(path).read_text(), loss_lo, loss_hi)

    @classmethod
    def parse_csv(cls, text: str, loss_lo: float = -math.inf, loss_hi: float = math.inf):
        rows = list(csv.DictReader(line for line in io.StringIO(text) if not line.startswith("#")))
        for i, row in enumerate(rows):
            if int(row["t"]) != i + 1:
                raise ValueError(f"row {i + 2}: expected t={i + 1}, got {row['t']}")
        return cls(
            [float(r["lambda"]) for r in rows],
            [float(r["loss"]) for r in rows],
            [float(r["risk"]) for r in rows],
            loss_lo,
            loss_hi,
        )


def fmt(x: float) -> str:
    """17-significant-digit decimal; round-trips every double exactly."""
    return f"{float(x):.17g}"


def running_mean(losses: Iterable[float]) -> np.ndarray:
    """Compensated running mean ``(1/t) * sum(losses[:t])`` for every t."""
    out = []
    total = comp = 0.0
    for t, x in enumerate(losses, start=1):
        x = float(x)
        s = total + x
        if abs(total) >= abs(x):
            comp += (total - s) + x
        else:
            comp += (x - s) + total
        total = s
        out.append((total + comp) / t)
    return np.asarray(out, dtype=float)


def run_controller(state: ControllerState, losses: Iterable[float]) -> tuple[ControllerState, RiskTrace]:
    """Feed ``losses`` through :func:`update`, recording a :class:`RiskTrace`."""
    lambdas, seen, risks = [], [], []
    for loss in losses:
        lambdas.append(state.lam)
        state = update(state, loss)
        seen.append(float(loss))
        risks.append(state.risk)
    trace = RiskTrace(lambdas, seen, risks, state.loss_lo, state.loss_hi, lambda_next=state.lam)
    return state, trace


def empirical_risk(trace: RiskTrace, t: int) -> float:
    """Mean of the first ``t`` losses; zero at ``t = 0``."""
    if t < 0 or t > len(trace):
        raise IndexError(f"t={t} outside [0, {len(trace)}]")
    if t == 0:
        return 0.0
    return math.fsum(trace.losses[:t]) / t


def _mirror(direction: LossDirection, *values: float):
    # Conservative orientation is the aggressive one with lambda negated.
    s = LossDirection.parse(direction).sign
    return tuple(s * v for v in values)


def theorem_bound(
    envelope: SafetyEnvelope,
    lambda_1: float,
    eta: float,
    epsilon: float,
    t: int,
    loss_range: tuple[float, float] = (0.0, 1.0),
    direction: LossDirection | str = LossDirection.AGGRESSIVE,
) -> float:
    """Finite-time upper bound on the empirical risk at step ``t``.

    ``epsilon + ((lambda_1 - lambda_safe) / eta + K * span) / t`` with
    ``span = loss_hi - loss_lo`` (``span = 1`` recovers the unit-range bound).
    """
    lo, hi = loss_range
    _check_range(lo, hi)
    if eta <= 0:
        raise ValueError("eta must be positive")
    k = envelope.k_horizon
    if t < k:
        raise ValueError(f"bound holds only for t >= K ({k}), got t={t}")
    lam1, lsafe = _mirror(direction, lambda_1, envelope.lambda_safe)
    if lam1 < lsafe - eta * (hi - lo):
        raise ValueError("initialization below lambda_safe - eta; use remark_bound")
    if envelope.epsilon_safe > epsilon:
        raise ValueError("epsilon_safe must not exceed epsilon")
    return epsilon + ((lam1 - lsafe) / eta + k * (hi - lo)) / t


def lemma_floor(
    envelope: SafetyEnvelope,
    eta: float,
    loss_span: float = 1.0,
    direction: LossDirection | str = LossDirection.AGGRESSIVE,
) -> float:
    """Lowest value lambda can reach (highest, for conservative orientation)."""
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    return envelope.lambda_safe - LossDirection.parse(direction).sign * envelope.k_horizon * eta * loss_span


def telescoping_risk(
    trace: RiskTrace,
    lambda_1: float,
    lambda_next: float,
    eta: float,
    epsilon: float,
    t: int,
    direction: LossDirection | str = LossDirection.AGGRESSIVE,
) -> float:
    """Empirical risk recovered from the endpoints of the lambda path alone."""
    if t < 1 or t > len(trace):
        raise IndexError(f"t={t} outside [1, {len(trace)}]")
    lam1, lam_next = _mirror(direction, lambda_1, lambda_next)
    return epsilon + (lam1 - lam_next) / (eta * t)


def remark_bound(
    trace: RiskTrace,
    envelope: SafetyEnvelope,
    eta: float,
    epsilon: float,
    t: int,
    direction: LossDirection | str = LossDirection.AGGRESSIVE,
) -> float:
    """Risk bound that tolerates any initialization.

    Steps before the first index ``k`` at which lambda reaches
    ``lambda_safe - eta * span`` are charged at ``loss_hi`` each; from ``k`` on
    the regular bound applies with ``lambda_k`` as the starting point.  If no
    such index exists, every step so far was on the safe side and only the
    trailing partial window is charged at ``loss_hi``.
    """
    if t < 1 or t > len(trace):
        raise IndexError(f"t={t} outside [1, {len(trace)}]")
    lo, hi = trace.loss_lo, trace.loss_hi
    span = hi - lo
    K = envelope.k_horizon
    lams = _mirror(direction, *trace.lambdas[:t])
    (lsafe,) = _mirror(direction, envelope.lambda_safe)
    k = next((i for i, lam in enumerate(lams, start=1) if lam >= lsafe - eta * span), None)
    if k is None:
        r = t % K
        return ((t - r) * envelope.epsilon_safe + r * hi) / t
    n = t - k + 1
    return ((k - 1) * hi + n * epsilon + (lams[k - 1] - lsafe) / eta + K * span) / t


def max_step(eta: float, epsilon: float, loss_lo: float, loss_hi: float) -> float:
    """Largest possible ``|lambda_{t+1} - lambda_t|`` over the declared range."""
    return eta * max(abs(epsilon - loss_lo), abs(epsilon - loss_hi))
