"""Offline calibration of lambda from exchangeable monotone loss curves.

``calibrate`` returns the largest lambda whose mean calibration loss is at
most ``epsilon - (1 - epsilon) / n``; a fresh exchangeable curve evaluated
there then has expected loss at most ``epsilon``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class LossCurve:
    """Loss as a nondecreasing function of lambda on ``[lo, hi]``."""

    evaluate: Callable[[float], float]
    lo: float = 0.0
    hi: float = 1.0

    def __call__(self, lam):
        return self.evaluate(lam)


@dataclass(frozen=True)
class BatchCalibration:
    lambda_hat: float
    n: int
    epsilon: float
    threshold: float
    infeasible_at_floor: bool = False


def mean_loss(curves: Sequence[LossCurve], lam: float) -> float:
    return math.fsum(float(c(lam)) for c in curves) / len(curves)


def calibrate(
    curves: Sequence[LossCurve],
    epsilon: float,
    domain: tuple[float, float] | None = None,
    grid_tol: float | None = None,
) -> BatchCalibration:
    """Bisection for the supremum of the feasible lambda set.

    The feasible set is a lower interval because the mean of monotone curves
    is monotone.  The result is a feasible lambda within ``grid_tol`` of the
    supremum (``grid_tol`` defaults to 1e-6 of the domain width).
    """
    curves = list(curves)
    if not curves:
        raise ValueError("calibrate needs at least one curve")
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    n = len(curves)
    threshold = epsilon - (1 - epsilon) / n
    if threshold <= 0:
        raise ValueError(
            f"threshold epsilon - (1 - epsilon)/n = {threshold:.4g} <= 0; need more curves"
        )
    lo, hi = domain if domain is not None else (curves[0].lo, curves[0].hi)
    if not lo < hi:
        raise ValueError(f"empty domain [{lo}, {hi}]")
    tol = grid_tol if grid_tol is not None else 1e-6 * (hi - lo)

    if mean_loss(curves, lo) > threshold:
        return BatchCalibration(lo, n, epsilon, threshold, infeasible_at_floor=True)
    if mean_loss(curves, hi) <= threshold:
        return BatchCalibration(hi, n, epsilon, threshold)
    # invariant: lo feasible, hi infeasible
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mean_loss(curves, mid) <= threshold:
            lo = mid
        else:
            hi = mid
    return BatchCalibration(lo, n, epsilon, threshold)


def verify_monotone(curve: LossCurve, probes: int = 101) -> bool:
    if probes < 2:
        raise ValueError("probes must be >= 2")
    values = [float(curve(x)) for x in np.linspace(curve.lo, curve.hi, probes)]
    return all(b >= a for a, b in zip(values, values[1:]))


def step_curve(lambdas: Sequence[float], losses: Sequence[float], lo: float | None = None, hi: float | None = None) -> LossCurve:
    """Right-continuous step interpolation of a tabulated curve.

    Below the first knot the first loss is used.  Tabulations must be sorted by
    lambda with nondecreasing losses in [0, 1].
    """
    lambdas = np.asarray(lambdas, dtype=float)
    losses = np.asarray(losses, dtype=float)
    if lambdas.size == 0 or lambdas.shape != losses.shape:
        raise ValueError("need matching, non-empty lambda and loss columns")
    if np.any(np.diff(lambdas) <= 0):
        raise ValueError("lambda knots must be strictly increasing")
    if np.any(np.diff(losses) < 0):
        raise ValueError("tabulated losses are not monotone nondecreasing")
    if np.any(losses < 0) or np.any(losses > 1):
        raise ValueError("losses must lie in [0, 1]")

    def evaluate(lam):
        idx = np.searchsorted(lambdas, lam, side="right") - 1
        return losses[np.maximum(idx, 0)]

    return LossCurve(
        evaluate,
        float(lambdas[0]) if lo is None else lo,
        float(lambdas[-1]) if hi is None else hi,
    )


def load_curve_csv(path: str | Path) -> LossCurve:
    """Read a ``lambda,loss`` tabulation into a step curve."""
    lams, losses = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"lambda", "loss"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected header 'lambda,loss'")
        for i, row in enumerate(reader, start=2):
            try:
                lams.append(float(row["lambda"]))
                losses.append(float(row["loss"]))
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{i}: bad row {row}") from exc
    return step_curve(lams, losses)


def random_step_curves(rng: np.random.Generator, n: int, lo: float = 0.0, hi: float = 1.0, jumps: int = 3):
    """Exchangeable monotone step curves with random jump points and heights.

    Each curve jumps ``jumps`` times at uniform locations, each jump of a
    random share of the total height, which is itself uniform on [0, 1].
    """
    curves = []
    for _ in range(n):
        knots = np.sort(rng.uniform(lo, hi, size=jumps))
        heights = rng.dirichlet(np.ones(jumps)) * rng.uniform(0, 1)
        levels = np.minimum(np.cumsum(heights), 1.0)
        curves.append(_jump_curve(knots, levels, lo, hi))
    return curves


def _jump_curve(knots, levels, lo, hi) -> LossCurve:
    def evaluate(lam):
        idx = np.searchsorted(knots, lam, side="right")
        return np.where(idx > 0, levels[np.maximum(idx - 1, 0)], 0.0)

    return LossCurve(evaluate, lo, hi)

