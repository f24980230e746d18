"""Static SVG line charts from trace CSVs."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiments import parse_trace  # noqa: E402

LABELS = {
    "lambda": r"$\lambda_t$",
    "risk": "empirical risk",
    "min_dist": "distance to nearest pedestrian (m)",
    "cum_loss": "cumulative loss",
    "cum_return": "cumulative return",
    "loss": "loss",
}


class ChannelError(KeyError):
    def __init__(self, missing: str, available: Sequence[str]):
        super().__init__(missing)
        self.missing = missing
        self.available = tuple(available)

    def __str__(self) -> str:
        return f"channel {self.missing!r} not in trace; available: {', '.join(self.available)}"


def load_traces(paths: Sequence[str | Path]) -> list[tuple[dict, dict]]:
    out = []
    for p in paths:
        meta, _, data = parse_trace(Path(p).read_text())
        out.append((meta, data))
    return out


def _stack(series: list[np.ndarray]) -> np.ndarray:
    """Pad ragged series with NaN so episodes of different length align on t."""
    n = max(len(s) for s in series)
    out = np.full((len(series), n), np.nan)
    for i, s in enumerate(series):
        out[i, : len(s)] = s
    return out


def _panel(ax, traces, channel: str, ref_line: float | None):
    ys = [d[channel] for _, d in traces]
    x_key = "t" if "t" in traces[0][1] else next(iter(traces[0][1]))
    xs = _stack([d[x_key] for _, d in traces])
    ys = _stack(ys)
    if len(traces) == 1:
        ax.plot(xs[0], ys[0], color="C0", lw=1.2)
    else:
        for x, y in zip(xs, ys):
            ax.plot(x, y, color="C0", lw=0.6, alpha=0.15)
        with np.errstate(invalid="ignore"):
            mean = np.nanmean(ys, axis=0)
        ax.plot(np.nanmax(xs, axis=0), mean, color="C0", lw=1.8, label="mean")
    if ref_line is not None:
        ax.axhline(ref_line, color="red", ls="--", lw=1.0)
    ax.set_ylabel(LABELS.get(channel, channel))
    ax.grid(alpha=0.3)


def render_chart(
    paths: Sequence[str | Path],
    channels: Sequence[str],
    out: str | Path,
    ref_line: float | None = None,
    title: str | None = None,
) -> Path:
    """One panel per channel, stacked and sharing the time axis.

    With several traces each is drawn faintly and their pointwise mean on top.
    ``ref_line`` adds a dashed horizontal line to every panel.
    """
    if not paths:
        raise ValueError("need at least one trace")
    if not channels:
        raise ValueError("need at least one channel")
    traces = load_traces(paths)
    for meta, data in traces:
        for c in channels:
            if c not in data:
                raise ChannelError(c, list(data))
    fig, axes = plt.subplots(len(channels), 1, figsize=(7, 2.6 * len(channels)), sharex=True, squeeze=False)
    for ax, c in zip(axes[:, 0], channels):
        _panel(ax, traces, c, ref_line)
    axes[-1, 0].set_xlabel("t")
    if title:
        axes[0, 0].set_title(title)
    fig.tight_layout()
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    # fixed salt and no date so identical inputs give identical files
    with matplotlib.rc_context({"svg.hashsalt": "conformal-decision"}):
        fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out
