"""Adaptive conformal inference baseline.

The miscoverage level follows ``alpha <- alpha + eta * (alpha_target - err)``,
which is the conformal controller with an indicator loss.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

# conformal_radius returns this when alpha >= 1: the empty set, i.e. no
# avoidance constraint / trade on the point prediction.
EMPTY_SET = -math.inf


@dataclass(frozen=True)
class AciState:
    alpha_t: float
    alpha_target: float
    eta: float
    t: int = 0
    n_err: int = 0

    def __post_init__(self):
        if not 0 < self.alpha_target < 1:
            raise ValueError(f"alpha_target must lie in (0, 1), got {self.alpha_target}")
        if self.eta < 0:
            raise ValueError(f"eta must be non-negative, got {self.eta}")

    @property
    def miscoverage(self) -> float:
        return self.n_err / self.t if self.t else 0.0


def aci_update(state: AciState, covered: bool) -> AciState:
    err = 0.0 if covered else 1.0
    return replace(
        state,
        alpha_t=state.alpha_t + state.eta * (state.alpha_target - err),
        t=state.t + 1,
        n_err=state.n_err + int(not covered),
    )


def conformal_radius(scores: Sequence[float], alpha: float) -> float:
    """Split-conformal quantile: the ceil((1 - alpha)(n + 1))-th smallest score.

    Returns ``inf`` for alpha <= 0 or when the rank exceeds n, and
    :data:`EMPTY_SET` for alpha >= 1.
    """
    scores = np.asarray(scores, dtype=float)
    n = scores.size
    if n == 0:
        raise ValueError("conformal_radius needs at least one score")
    if alpha <= 0:
        return math.inf
    if alpha >= 1:
        return EMPTY_SET
    rank = math.ceil((1 - alpha) * (n + 1))
    if rank > n:
        return math.inf
    return float(np.partition(scores, rank - 1)[rank - 1])


class ScoreWindow:
    """Sliding window of the most recent nonconformity scores."""

    def __init__(self, window: int = 30):
        if window < 1:
            raise ValueError("window must be >= 1")
        self._steps: deque[list[float]] = deque(maxlen=window)

    def push(self, step_scores: Sequence[float]) -> None:
        self._steps.append([float(s) for s in step_scores])

    @property
    def scores(self) -> list[float]:
        return [s for step in self._steps for s in step]

    def radius(self, alpha: float) -> float:
        scores = self.scores
        if not scores:
            return math.inf if alpha <= 0 else (EMPTY_SET if alpha >= 1 else 0.0)
        return conformal_radius(scores, alpha)


def aci_trace_rows(alphas, errs):
    """Rows for the ``t,alpha,err,miscoverage`` trace CSV."""
    rows = []
    n_err = 0
    for t, (alpha, err) in enumerate(zip(alphas, errs), start=1):
        n_err += int(err)
        rows.append((t, alpha, int(err), n_err / t))
    return rows
