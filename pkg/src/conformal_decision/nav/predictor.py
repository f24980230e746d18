"""Autoregressive pedestrian forecaster.

Each pedestrian gets its own order-p linear autoregression on position
increments, fit by least squares over a trailing window.  The x and y
increment series share one coefficient vector.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np


@dataclass
class PedestrianSet:
    """Current pedestrian positions plus a bounded history per id."""

    history_len: int = 16
    tracks: dict = field(default_factory=dict)
    history: dict = field(default_factory=dict)

    def observe(self, frame: dict) -> None:
        """Replace current tracks with ``frame`` (id -> (x, y)).

        Ids absent from the frame lose their history.
        """
        for pid in list(self.history):
            if pid not in frame:
                del self.history[pid]
        self.tracks = {pid: np.asarray(pos, dtype=float) for pid, pos in frame.items()}
        for pid, pos in self.tracks.items():
            self.history.setdefault(pid, deque(maxlen=self.history_len)).append(pos)

    def positions(self) -> np.ndarray:
        if not self.tracks:
            return np.empty((0, 2))
        return np.stack([self.tracks[k] for k in sorted(self.tracks)])


@dataclass
class PredictionBundle:
    """Predicted positions per id for lead times 0..H (lead 0 = now)."""

    horizon: int
    paths: dict = field(default_factory=dict)
    fallback: set = field(default_factory=set)

    def array(self) -> np.ndarray:
        """Stacked predictions (M, H + 1, 2), ids in sorted order."""
        if not self.paths:
            return np.empty((0, self.horizon + 1, 2))
        return np.stack([self.paths[k] for k in sorted(self.paths)])


def fit_ar(increments: np.ndarray, order: int) -> np.ndarray:
    """Least-squares AR coefficients (order,), shared across coordinates.

    Row j predicts ``d[j]`` from ``d[j-1], ..., d[j-order]``.
    """
    n = len(increments)
    X = np.concatenate(
        [np.stack([increments[j - order : j][::-1, c] for j in range(order, n)]) for c in range(2)]
    )
    y = np.concatenate([increments[order:, c] for c in range(2)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return coef


def ar_forecast(history, horizon: int, order: int = 3, window: int = 12) -> tuple[np.ndarray, bool]:
    """Forecast the next ``horizon`` positions from a (n, 2) history.

    Falls back to constant velocity when there are fewer than ``order + 2``
    points (``order + 1`` increments, i.e. one regression row).  Returns
    ``(positions (horizon, 2), used_fallback)``.
    """
    hist = np.asarray(history, dtype=float)[-(window + 1) :]
    last = hist[-1]
    if len(hist) < 2:
        return np.repeat(last[None], horizon, axis=0), True
    inc = np.diff(hist, axis=0)
    if len(inc) < order + 1:
        return last + np.outer(np.arange(1, horizon + 1), inc[-1]), True
    coef = fit_ar(inc, order)
    cap = 2.0 * np.max(np.linalg.norm(inc, axis=1))
    recent = list(inc[-order:][::-1])
    out = np.empty((horizon, 2))
    pos = last.copy()
    for k in range(horizon):
        d = sum(c * r for c, r in zip(coef, recent))
        norm = np.linalg.norm(d)
        if norm > cap:  # unstable fit: keep steps within the observed scale
            d = d * (cap / norm)
        pos = pos + d
        out[k] = pos
        recent = [d] + recent[:-1]
    return out, False


def predict(pedestrians: PedestrianSet, horizon: int, order: int = 3, window: int = 12) -> PredictionBundle:
    bundle = PredictionBundle(horizon)
    for pid in sorted(pedestrians.tracks):
        hist = np.stack(pedestrians.history[pid])
        future, fell_back = ar_forecast(hist, horizon, order, window)
        bundle.paths[pid] = np.vstack([pedestrians.tracks[pid][None], future])
        if fell_back:
            bundle.fallback.add(pid)
    return bundle
