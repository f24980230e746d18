"""Navigation scenarios: config records, synthetic crowds, SDD ingestion."""

from __future__ import annotations

import dataclasses
import math
import re
import shlex
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .planner import Obstacle

PLANNERS = ("conformal", "aci", "aggressive", "conservative")
SDD_LABELS = {"Pedestrian", "Biker", "Skater", "Cart", "Car", "Bus"}


class ScenarioError(ValueError):
    """Malformed scenario; message carries file/line context when known."""


@dataclass(frozen=True)
class CrowdSpec:
    """Pedestrians crossing the robot's corridor, mostly along +/- y."""

    count: int = 30
    x_range: tuple[float, float] = (4.0, 16.0)
    y_extent: float = 9.0
    speed_range: tuple[float, float] = (0.8, 1.4)
    cross_window: tuple[float, float] = (0.0, 25.0)
    heading_std: float = 0.25
    wobble_std: float = 0.05


@dataclass(frozen=True)
class WaypointScript:
    """One scripted pedestrian walking a polyline at constant speed."""

    pid: int
    waypoints: tuple
    speed: float = 1.0
    start_time: float = 0.0


@dataclass(frozen=True)
class NavScenario:
    name: str = "scenario"
    start: tuple[float, float] = (0.0, 0.0)
    start_heading: float = 0.0
    goal: tuple[float, float] = (20.0, 0.0)
    bounds: tuple[float, float, float, float] = (-2.0, -10.0, 22.0, 10.0)
    dt: float = 0.2
    horizon: int = 10
    v_max: float = 2.0
    omega_max: float = 1.5
    a_max: float = 2.0
    candidates: int = 128
    planner: str = "conformal"
    eta: float = 100.0
    epsilon: float = -2.0
    lambda_init: float = 0.0
    lambda_max: float = 20.0
    clip: float | None = None
    collision_radius: float = 0.3
    goal_tolerance: float = 0.5
    time_budget: float = 60.0
    seed: int = 0
    ar_order: int = 3
    ar_window: int = 12
    aci_alpha: float = 0.01
    aci_eta: float = 0.01
    aci_window: int = 30
    obstacles: tuple = ()
    crowd: CrowdSpec | None = None
    scripts: tuple = ()
    sdd_path: str | None = None
    sdd_scale: float = 1.0
    sdd_stride: int = 1

    def __post_init__(self):
        if self.planner not in PLANNERS:
            raise ScenarioError(f"planner must be one of {PLANNERS}, got {self.planner!r}")
        for name in ("dt", "v_max", "omega_max", "a_max", "collision_radius", "goal_tolerance", "time_budget"):
            if not getattr(self, name) > 0:
                raise ScenarioError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.eta >= 0:
            raise ScenarioError(f"eta must be non-negative, got {self.eta}")
        if self.horizon < 1 or self.candidates < 1:
            raise ScenarioError("horizon and candidates must be >= 1")
        if self.clip is not None and not self.clip > 0:
            raise ScenarioError(f"clip must be positive, got {self.clip}")
        if not all(math.isfinite(v) for v in (*self.start, *self.goal)):
            raise ScenarioError("start and goal must be finite")

    @property
    def loss_clip(self) -> float:
        """Explicit clip, else the scene bounding-box diagonal."""
        if self.clip is not None:
            return self.clip
        x0, y0, x1, y1 = self.bounds
        return math.hypot(x1 - x0, y1 - y0)

    @property
    def max_steps(self) -> int:
        return int(math.floor(self.time_budget / self.dt + 1e-9))

    def with_(self, **changes) -> "NavScenario":
        return dataclasses.replace(self, **changes)


class PedestrianScript:
    """Ground-truth pedestrian positions per step: a list of {id: (x, y)}."""

    def __init__(self, frames: list[dict]):
        self.frames = frames

    def __len__(self) -> int:
        return len(self.frames)

    def at(self, step: int) -> dict:
        if step < len(self.frames):
            return self.frames[step]
        return {}


def crowd_script(spec: CrowdSpec, steps: int, dt: float, seed: int) -> PedestrianScript:
    rng = np.random.Generator(np.random.Philox(key=seed))
    t = np.arange(steps) * dt
    frames: list[dict] = [{} for _ in range(steps)]
    for pid in range(spec.count):
        x0 = rng.uniform(*spec.x_range)
        direction = rng.choice([-1.0, 1.0])
        speed = rng.uniform(*spec.speed_range)
        t_cross = rng.uniform(*spec.cross_window)
        psi = rng.normal(0.0, spec.heading_std)
        vel = speed * np.array([math.sin(psi), direction * math.cos(psi)])
        # smooth lateral wobble: AR(1) velocity perturbation, integrated
        pert = np.zeros((steps, 2))
        for k in range(1, steps):
            pert[k] = 0.9 * pert[k - 1] + rng.normal(0.0, spec.wobble_std, size=2)
        offset = np.cumsum(pert, axis=0) * dt
        for k in range(steps):
            p = np.array([x0, 0.0]) + vel * (t[k] - t_cross) + offset[k]
            if abs(p[1]) <= spec.y_extent:
                frames[k][pid] = p
    return PedestrianScript(frames)


def waypoint_script(scripts, steps: int, dt: float) -> PedestrianScript:
    frames: list[dict] = [{} for _ in range(steps)]
    for s in scripts:
        pts = np.asarray(s.waypoints, dtype=float).reshape(-1, 2)
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        for k in range(steps):
            tk = k * dt - s.start_time
            if tk < 0:
                continue
            dist = s.speed * tk
            if len(pts) == 1 or dist >= cum[-1]:
                frames[k][s.pid] = pts[-1].copy()
            else:
                j = int(np.searchsorted(cum, dist, side="right") - 1)
                frac = (dist - cum[j]) / seg[j]
                frames[k][s.pid] = pts[j] + frac * (pts[j + 1] - pts[j])
    return PedestrianScript(frames)


@dataclass
class SddTracks:
    frames: list[int]
    positions: dict  # frame -> {track_id: (x, y) meters}
    skipped: Counter = field(default_factory=Counter)
    unknown_labels: Counter = field(default_factory=Counter)

    def script(self, stride: int = 1, origin=(0.0, 0.0)) -> PedestrianScript:
        chosen = self.frames[::stride]
        o = np.asarray(origin, dtype=float)
        return PedestrianScript([{k: np.asarray(v) - o for k, v in self.positions[f].items()} for f in chosen])


def ingest_sdd(path: str | Path, scale: float) -> SddTracks:
    """Parse a Stanford-Drone-Dataset annotation file into metric positions.

    Keeps ``Pedestrian`` rows with ``lost == 0``; positions are box centers
    times ``scale`` (meters per pixel).  Frames with no kept rows still count
    as steps so timing follows the video.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    positions: dict[int, dict] = {}
    skipped: Counter = Counter()
    unknown: Counter = Counter()
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                parts = shlex.split(line)
                tid, xmin, ymin, xmax, ymax, frame, lost, _occ, _gen = (int(p) for p in parts[:9])
                label = parts[9]
            except (ValueError, IndexError) as exc:
                raise ScenarioError(f"{path}:{lineno}: unparseable SDD row: {line.strip()!r}") from exc
            positions.setdefault(frame, {})
            if label not in SDD_LABELS:
                unknown[label] += 1
                continue
            if label != "Pedestrian":
                skipped[label] += 1
                continue
            if lost:
                skipped["lost"] += 1
                continue
            positions[frame][tid] = ((xmin + xmax) / 2 * scale, (ymin + ymax) / 2 * scale)
    return SddTracks(sorted(positions), positions, skipped, unknown)


def build_script(sc: NavScenario, base_dir: Path | None = None) -> PedestrianScript:
    steps = sc.max_steps + 1
    if sc.sdd_path is not None:
        path = Path(sc.sdd_path)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return ingest_sdd(path, sc.sdd_scale).script(sc.sdd_stride)
    frames: list[dict] = [{} for _ in range(steps)]
    if sc.crowd is not None:
        for k, fr in enumerate(crowd_script(sc.crowd, steps, sc.dt, sc.seed).frames):
            frames[k].update(fr)
    if sc.scripts:
        offset = sc.crowd.count if sc.crowd is not None else 0
        for k, fr in enumerate(waypoint_script(sc.scripts, steps, sc.dt).frames):
            frames[k].update({offset + pid: p for pid, p in fr.items()})
    return PedestrianScript(frames)


_FIELDS = {f.name: f for f in dataclasses.fields(NavScenario)}


def _key_line(text: str, key: str) -> int | None:
    m = re.search(rf"^\s*{re.escape(key)}\s*:", text, flags=re.M)
    return text.count("\n", 0, m.start()) + 1 if m else None


def scenario_from_dict(data: dict, source: str = "<scenario>", text: str = "") -> NavScenario:
    """Build a :class:`NavScenario` from a parsed mapping."""

    def fail(key, msg):
        line = _key_line(text, key) if text else None
        where = f"{source}:{line}" if line else source
        raise ScenarioError(f"{where}: {key}: {msg}")

    if not isinstance(data, dict):
        raise ScenarioError(f"{source}: expected a mapping at top level")
    kw = {}
    for key, value in data.items():
        if key in ("environment", "seeds", "output_dir", "planners", "etas"):
            continue
        if key not in _FIELDS:
            fail(key, "unknown field")
        try:
            if key == "crowd":
                value = None if value is None else CrowdSpec(**{k: tuple(v) if isinstance(v, list) else v for k, v in value.items()})
            elif key == "scripts":
                value = tuple(WaypointScript(**{**s, "waypoints": tuple(map(tuple, s["waypoints"]))}) for s in value)
            elif key == "obstacles":
                value = tuple(Obstacle(*o) if isinstance(o, (list, tuple)) else Obstacle(**o) for o in value)
            elif key in ("start", "goal", "bounds"):
                value = tuple(float(v) for v in value)
            elif key in ("horizon", "candidates", "seed", "ar_order", "ar_window", "aci_window", "sdd_stride"):
                value = int(value)
            elif key in ("name", "planner", "sdd_path"):
                value = None if value is None else str(value)
            elif value is not None:
                value = float(value)
        except (TypeError, ValueError, KeyError) as exc:
            fail(key, f"invalid value {value!r} ({exc})")
        kw[key] = value
    try:
        return NavScenario(**kw)
    except ScenarioError as exc:
        key = str(exc).split(" ")[0]
        line = _key_line(text, key) if text else None
        raise ScenarioError(f"{source}:{line}: {exc}" if line else f"{source}: {exc}") from None


def load_scenario(path: str | Path) -> NavScenario:
    path = Path(path)
    text = path.read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark is not None else str(path)
        raise ScenarioError(f"{where}: malformed scenario: {getattr(exc, 'problem', exc)}") from None
    sc = scenario_from_dict(data, str(path), text)
    if sc.sdd_path is not None and not Path(sc.sdd_path).is_absolute():
        sc = sc.with_(sdd_path=str(path.parent / sc.sdd_path))
    return sc


BUNDLED = Path(__file__).parent / "scenarios"


def bundled_scenario(name: str = "crossing_crowd") -> NavScenario:
    return load_scenario(BUNDLED / f"{name}.yaml")
