"""Experiment specs, the (method x setting x seed) runner, and summaries.

Every cell writes one trace CSV.  Per-run metrics are always computed from
the parsed trace text, so re-aggregating the files on disk reproduces the
summary exactly.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import batch, factory, theory, trading
from .nav import scenario as nav_scenario
from .nav import sim as nav_sim

ENVIRONMENTS = ("nav", "factory", "trading", "batch", "theory_check")
WORKERS_ENV = "CONFORMAL_DECISION_MAX_WORKERS"
RESERVED = ("environment", "seeds", "output_dir", "methods", "sweep")
GROUP_SEEDS = 200  # seeds simulated together in one job


class SpecError(ValueError):
    """Invalid experiment spec; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class ExperimentSpec:
    environment: str
    methods: tuple
    seeds: tuple
    output_dir: str
    params: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)

    def settings(self) -> list[dict]:
        """Cartesian product of the sweep values; ``[{}]`` when no sweep."""
        if not self.sweep:
            return [{}]
        keys = list(self.sweep)
        return [dict(zip(keys, combo)) for combo in itertools.product(*(self.sweep[k] for k in keys))]

    def cells(self) -> list[tuple[str, dict, int]]:
        return [(m, s, seed) for m in self.methods for s in self.settings() for seed in self.seeds]


def fmt(x) -> str:
    if type(x) is float:
        return repr(x)
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    # shortest string that parses back to the same double
    return repr(float(x))


def setting_label(setting: dict) -> str:
    return ";".join(f"{k}={fmt(v) if isinstance(v, (int, float)) else v}" for k, v in setting.items())


# -- environments -----------------------------------------------------------
#
# Each environment provides defaults, its method names, a validator that
# builds the underlying configs, a trace producer and a trace -> metrics map.


def _mean(xs) -> float:
    xs = list(xs)
    return math.fsum(xs) / len(xs) if xs else math.nan


class _PerSeed:
    """Environments whose episodes cannot share a vectorized simulation."""

    @classmethod
    def trace_batch(cls, p, method, seeds):
        return [cls.trace_one(p, method, s) for s in seeds]


class _Factory:
    defaults = dict(horizon=2000, epsilon=0.05, eta=0.05, lambda_init=0.0, arms=21, c_rate=10.0, c_fail=0.2)
    methods = tuple(p.value for p in factory.Policy)
    columns = ("t", "lambda", "speed", "n_items", "loss", "utility", "risk")
    aggregate = {"final_risk": "mean", "mean_utility": "mean"}

    @staticmethod
    def check(p, method):
        factory.FactoryModel(p["c_rate"], p["c_fail"])
        factory.FactoryConfig(method, int(p["horizon"]), p["epsilon"], p["eta"], p["lambda_init"], int(p["arms"]))

    @staticmethod
    def trace_batch(p, method, seeds):
        cfg = factory.FactoryConfig(method, int(p["horizon"]), p["epsilon"], p["eta"], p["lambda_init"], int(p["arms"]))
        run = factory.run_policy_batch(seeds, cfg, p["c_rate"], p["c_fail"])
        t = list(range(1, cfg.horizon + 1))
        out = []
        for i in range(len(seeds)):
            cols = (run.lambdas[i], run.speeds[i], run.n_items[i], run.losses[i], run.utilities[i], run.risk_trace(i).risks)
            out.append((list(zip(t, *(np.asarray(c).tolist() for c in cols))), {}))
        return out

    @staticmethod
    def metrics(data, meta):
        return {"final_risk": _mean(data["loss"]), "mean_utility": _mean(data["utility"])}


class _Trading:
    defaults = dict(
        mu=0.08, sigma=0.2, rho=0.1, steps_per_year=1764, years=5, epsilon_yearly=0.25, eta=20.0,
        lambda_init=0.0, clip_sigmas=5.0, aci_alpha=0.10, aci_eta=0.005,
    )
    methods = tuple(s.value for s in trading.Strategy)
    columns = ("t", "r", "r_hat", "lambda", "action", "loss", "cum_loss", "cum_return")
    aggregate = {"mean_yearly_loss": "mean", "mean_yearly_return": "mean"}

    @staticmethod
    def _build(p, method, seed=0):
        market = trading.MarketModel(p["mu"], p["sigma"], p["rho"], int(p["steps_per_year"]), int(p["years"]), seed)
        cfg = trading.TradingConfig(
            method, p["epsilon_yearly"], p["eta"], p["lambda_init"], p["clip_sigmas"], p["aci_alpha"], p["aci_eta"]
        )
        return market, cfg

    @classmethod
    def check(cls, p, method):
        cls._build(p, method)

    @classmethod
    def trace_batch(cls, p, method, seeds):
        market, cfg = cls._build(p, method)
        run = trading.run_strategy_batch(seeds, market, cfg)
        cum_loss, cum_ret = np.cumsum(run.losses, axis=1), np.cumsum(run.returns, axis=1)
        t = list(range(1, market.horizon + 1))
        out = []
        for i in range(len(seeds)):
            cols = (run.r[i], run.r_hat[i], run.lambdas[i], run.actions[i], run.losses[i], cum_loss[i], cum_ret[i])
            out.append((list(zip(t, *(c.tolist() for c in cols))), {"steps_per_year": market.steps_per_year}))
        return out

    @staticmethod
    def metrics(data, meta):
        n = int(meta["steps_per_year"])
        loss = data["loss"]
        ret = data["action"] * data["r"]
        years = len(loss) // n
        return {
            "mean_yearly_loss": _mean(math.fsum(loss[y * n : (y + 1) * n]) for y in range(years)),
            "mean_yearly_return": _mean(math.fsum(ret[y * n : (y + 1) * n]) for y in range(years)),
        }


class _Nav(_PerSeed):
    defaults = dict(scenario="crossing_crowd")
    methods = nav_scenario.PLANNERS
    columns = nav_sim.TRACE_COLUMNS
    aggregate = {
        "success": "mean",
        "time_s": "finite_mean",
        "safe": "mean",
        "min_dist": "mean",
        "avg_dist": "mean",
        "q05": "mean",
        "q10": "mean",
        "q25": "mean",
        "q50": "mean",
        "collision_steps": "sum",
    }

    @staticmethod
    def scenario(p, method, seed=None) -> nav_scenario.NavScenario:
        name = str(p.get("scenario", "crossing_crowd"))
        path = Path(name)
        base = nav_scenario.load_scenario(path) if path.suffix in (".yaml", ".yml") else nav_scenario.bundled_scenario(name)
        overrides = {k: v for k, v in p.items() if k != "scenario"}
        sc = base
        if overrides:
            # parse the overrides alone for type coercion, then graft them on
            parsed = nav_scenario.scenario_from_dict(overrides, "parameters")
            sc = base.with_(**{k: getattr(parsed, k) for k in overrides})
        sc = sc.with_(planner=method)
        return sc if seed is None else sc.with_(seed=seed)

    @classmethod
    def check(cls, p, method):
        cls.scenario(p, method)

    @classmethod
    def trace_one(cls, p, method, seed):
        sc = cls.scenario(p, method, seed)
        res = nav_sim.run_episode(sc)
        meta = {
            "dt": sc.dt,
            "goal_x": sc.goal[0],
            "goal_y": sc.goal[1],
            "goal_tolerance": sc.goal_tolerance,
            "collision_radius": sc.collision_radius,
            "close_radius": abs(sc.epsilon),
        }
        return res.rows, meta

    @staticmethod
    def metrics(data, meta):
        x, y, t = data["x"], data["y"], data["t"]
        success = bool(len(t)) and bool(np.hypot(x[-1] - float(meta["goal_x"]), y[-1] - float(meta["goal_y"])) <= float(meta["goal_tolerance"]))
        time_s = float(t[-1]) * float(meta["dt"]) if success else math.inf
        m = nav_sim.metrics_from_distances(
            list(data["min_dist"]), success, time_s, float(meta["collision_radius"]), float(meta["close_radius"])
        )
        return {k: getattr(m, k) for k in _Nav.aggregate}


class _Batch(_PerSeed):
    defaults = dict(n=100, epsilon=0.1, trials=500, jumps=3)
    methods = ("crc",)
    columns = ("trial", "lambda_hat", "heldout_loss", "infeasible")
    aggregate = {"mean_heldout_loss": "mean", "se_heldout_loss": "mean", "mean_lambda_hat": "mean"}

    @staticmethod
    def check(p, method):
        n, eps = int(p["n"]), float(p["epsilon"])
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        if not 0 < eps < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
        if eps - (1 - eps) / n <= 0:
            raise ValueError(f"n is too small for epsilon={eps}: epsilon - (1 - epsilon)/n <= 0")
        if int(p["trials"]) < 1:
            raise ValueError("trials must be >= 1")
        if int(p["jumps"]) < 1:
            raise ValueError("jumps must be >= 1")

    @staticmethod
    def trace_one(p, method, seed):
        rows = batch_trials(int(p["n"]), float(p["epsilon"]), int(p["trials"]), seed, int(p["jumps"]))
        return rows, {}

    @staticmethod
    def metrics(data, meta):
        loss = data["heldout_loss"]
        k = len(loss)
        mean = _mean(loss)
        var = math.fsum((v - mean) ** 2 for v in loss) / (k - 1) if k > 1 else 0.0
        return {"mean_heldout_loss": mean, "se_heldout_loss": math.sqrt(var / k), "mean_lambda_hat": _mean(data["lambda_hat"])}


class _Theory(_PerSeed):
    defaults = dict(n_sequences=1000, horizon=200)
    methods = ("cc",)
    columns = theory.SEQUENCE_COLUMNS
    aggregate = {
        "sequences": "sum",
        "violations": "sum",
        "risk_violations": "sum",
        "floor_violations": "sum",
        "contract_violations": "sum",
        "worst_risk_margin": "min",
        "worst_floor_margin": "min",
    }

    @staticmethod
    def check(p, method):
        if int(p["n_sequences"]) < 1:
            raise ValueError("n_sequences must be >= 1")
        if int(p["horizon"]) < 5:
            raise ValueError("horizon must be >= 5 (the largest window length drawn)")

    @staticmethod
    def trace_one(p, method, seed):
        return theory.theory_rows(int(p["n_sequences"]), int(p["horizon"]), seed), {}

    @staticmethod
    def metrics(data, meta):
        rows = list(zip(*(data[c] for c in theory.SEQUENCE_COLUMNS)))
        return {k: v for k, v in theory.summarize_rows(rows).items() if k in _Theory.aggregate}


ENV = {"factory": _Factory, "trading": _Trading, "nav": _Nav, "batch": _Batch, "theory_check": _Theory}


def batch_trials(n: int, epsilon: float, trials: int, seed: int, jumps: int = 3) -> list[tuple]:
    """Calibrate on ``n`` fresh curves per trial and score one held-out curve."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    rows = []
    for i in range(trials):
        curves = batch.random_step_curves(rng, n + 1, jumps=jumps)
        cal = batch.calibrate(curves[:n], epsilon)
        rows.append((i, cal.lambda_hat, float(curves[n](cal.lambda_hat)), int(cal.infeasible_at_floor)))
    return rows


# -- spec parsing ----------------------------------------------------------


def _parse_seeds(value) -> tuple:
    if isinstance(value, dict):
        if set(value) != {"base", "count"}:
            raise SpecError("seeds", "mapping form needs exactly 'base' and 'count'")
        base, count = value["base"], value["count"]
        if not (isinstance(base, int) and isinstance(count, int)) or count < 1 or base < 0:
            raise SpecError("seeds", "base must be a non-negative integer and count a positive integer")
        return tuple(range(base, base + count))
    if isinstance(value, int) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, list) or not value:
        raise SpecError("seeds", "expected a non-empty integer list or {base, count}")
    if not all(isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in value):
        raise SpecError("seeds", "seeds must be non-negative integers")
    return tuple(value)


def _coerce(env, key, value):
    default = env.defaults.get(key)
    if env is _Nav:
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(key, f"expected a number, got {value!r}")
    if isinstance(default, int) and not isinstance(default, bool):
        if float(value) != int(value):
            raise SpecError(key, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def parse_spec(data, source: str = "<spec>") -> ExperimentSpec:
    """Validate a parsed spec mapping; raises :class:`SpecError`.

    Every (method, setting) combination is checked by building the
    environment's configs, so a spec that parses will not fail validation
    midway through a run.
    """
    if not isinstance(data, dict):
        raise SpecError("environment", f"{source}: expected a mapping at top level")
    env_name = data.get("environment")
    if env_name not in ENVIRONMENTS:
        raise SpecError("environment", f"must be one of {ENVIRONMENTS}, got {env_name!r}")
    env = ENV[env_name]
    seeds = _parse_seeds(data.get("seeds", [0]))
    methods = data.get("methods", list(env.methods))
    if isinstance(methods, str):
        methods = [methods]
    if not isinstance(methods, list) or not methods:
        raise SpecError("methods", "expected a non-empty list")
    for m in methods:
        if m not in env.methods:
            raise SpecError("methods", f"unknown method {m!r} for {env_name}; choose from {env.methods}")
    output_dir = data.get("output_dir", f"results/{env_name}")
    if not isinstance(output_dir, str) or not output_dir:
        raise SpecError("output_dir", "expected a path string")

    params = dict(env.defaults)
    for key, value in data.items():
        if key in RESERVED:
            continue
        if env is not _Nav and key not in env.defaults:
            raise SpecError(key, f"unknown parameter for {env_name}")
        params[key] = _coerce(env, key, value)

    sweep = data.get("sweep") or {}
    if not isinstance(sweep, dict):
        raise SpecError("sweep", "expected a mapping of parameter -> list of values")
    clean_sweep = {}
    for key, values in sweep.items():
        if key in RESERVED:
            raise SpecError(f"sweep.{key}", "cannot sweep a reserved key")
        if env is not _Nav and key not in env.defaults:
            raise SpecError(f"sweep.{key}", f"unknown parameter for {env_name}")
        if not isinstance(values, list) or not values:
            raise SpecError(f"sweep.{key}", "expected a non-empty list")
        clean_sweep[key] = [_coerce(env, key, v) for v in values]

    spec = ExperimentSpec(env_name, tuple(methods), seeds, output_dir, params, clean_sweep)
    for method in spec.methods:
        for setting in spec.settings():
            try:
                env.check({**params, **setting}, method)
            except (ValueError, TypeError, KeyError, OSError) as exc:
                name = _blame(str(exc), {**params, **setting})
                raise SpecError(f"sweep.{name}" if name in setting else name, str(exc)) from None
    return spec


def _blame(message: str, params: dict) -> str:
    """Best guess at the field a config error refers to."""
    for token in message.replace(":", " ").split():
        if token in params:
            return token
    return "parameters"


def load_spec(path: str | Path) -> ExperimentSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError("spec", f"cannot read {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark is not None else str(path)
        raise SpecError("spec", f"{where}: malformed YAML") from None
    if isinstance(data, dict) and data.get("environment") == "nav":
        scen = data.get("scenario")
        if isinstance(scen, str) and scen.endswith((".yaml", ".yml")) and not Path(scen).is_absolute():
            data = {**data, "scenario": str(path.parent / scen)}
    return parse_spec(data, str(path))


# -- trace files -------------------------------------------------------------


def trace_name(env: str, method: str, setting: dict, seed: int) -> str:
    tag = "".join(c if c.isalnum() or c in ".-" else "_" for c in setting_label(setting))
    return f"{env}_{method}{'_' + tag if tag else ''}_seed{seed}.csv"


def trace_text(columns, rows, meta: dict) -> str:
    head = " ".join(f"{k}={fmt(v) if isinstance(v, (int, float)) else v}" for k, v in meta.items())
    out = io.StringIO()
    out.write(f"# {head}\n")
    out.write(",".join(columns) + "\n")
    # format column by column: one type check per column instead of per value
    cols = []
    for col in zip(*rows):
        if all(type(v) is float for v in col):
            cols.append(map(float.__repr__, col))
        elif all(type(v) is int for v in col):
            cols.append(map(int.__repr__, col))
        else:
            cols.append(map(fmt, col))
    out.writelines(",".join(r) + "\n" for r in zip(*cols))
    return out.getvalue()


def parse_trace(text: str) -> tuple[dict, tuple, dict]:
    """Return (header metadata, column names, column -> float array)."""
    meta: dict = {}
    lines = text.splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            for item in line[1:].split():
                k, _, v = item.partition("=")
                meta[k] = v
        elif line:
            body.append(line)
    if not body:
        raise ValueError("trace has no header row")
    columns = tuple(next(csv.reader(body[:1])))
    if len(body) == 1:
        arr = np.empty((0, len(columns)))
    else:
        arr = np.loadtxt(body[1:], delimiter=",", dtype=float, ndmin=2).reshape(-1, len(columns))
    return meta, columns, {c: arr[:, i] for i, c in enumerate(columns)}


@dataclass
class CellResult:
    method: str
    setting: dict
    seed: int
    status: str
    metrics: dict
    trace_file: str | None = None
    error: str = ""


def _failed(method, setting, seed, exc) -> CellResult:
    msg = f"{type(exc).__name__}: {exc}"
    return CellResult(method, setting, seed, "failed", {}, None, msg + "\n" + traceback.format_exc(limit=3))


def _record(spec, method, setting, seed, rows, extra, trace_dir) -> CellResult:
    env = ENV[spec.environment]
    meta = {"seed": seed, "stream": f"philox/{spec.environment}/{method}", "environment": spec.environment, "method": method}
    if setting:
        meta["setting"] = setting_label(setting)
    meta.update(extra)
    text = trace_text(env.columns, rows, meta)
    name = trace_name(spec.environment, method, setting, seed)
    Path(trace_dir, name).write_text(text)
    parsed_meta, _, data = parse_trace(text)
    return CellResult(method, setting, seed, "ok", env.metrics(data, parsed_meta), name)


def run_cell(spec: ExperimentSpec, method: str, setting: dict, seed: int, trace_dir: str) -> CellResult:
    env = ENV[spec.environment]
    try:
        (rows, extra), = env.trace_batch({**spec.params, **setting}, method, [seed])
        return _record(spec, method, setting, seed, rows, extra, trace_dir)
    except Exception as exc:  # a failing cell must not take down the others
        return _failed(method, setting, seed, exc)


def run_group(spec: ExperimentSpec, method: str, setting: dict, seeds, trace_dir: str) -> list[CellResult]:
    """Cells sharing (method, setting), simulated together where the
    environment vectorizes over seeds.  Each seed's stream depends on that
    seed alone, so grouping never changes a trace.  If the group raises, its
    seeds are retried one by one so only the offending cells fail."""
    env = ENV[spec.environment]
    seeds = list(seeds)
    try:
        outputs = env.trace_batch({**spec.params, **setting}, method, seeds)
    except Exception:
        return [run_cell(spec, method, setting, seed, trace_dir) for seed in seeds]
    results = []
    for seed, (rows, extra) in zip(seeds, outputs):
        try:
            results.append(_record(spec, method, setting, seed, rows, extra, trace_dir))
        except Exception as exc:
            results.append(_failed(method, setting, seed, exc))
    return results


def _run_group_args(args):
    return run_group(*args)


def worker_count(requested: int | None) -> int:
    n = requested if requested is not None else 1
    cap = os.environ.get(WORKERS_ENV)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, n)


# -- summaries ---------------------------------------------------------------


def summarize(env_name: str, results: list[CellResult]) -> tuple[list[str], list[list]]:
    """Aggregate per-run metrics into rows keyed by (method, setting)."""
    env = ENV[env_name]
    groups: dict = {}
    for r in results:
        groups.setdefault((r.method, setting_label(r.setting)), []).append(r)
    header = ["method", "setting", "runs", "failed"]
    for name, how in env.aggregate.items():
        header += [f"mean_{name}", f"se_{name}"] if how == "mean" else [f"{how}_{name}"]
    table = []
    for (method, label), rs in groups.items():
        ok = [r.metrics for r in rs if r.status == "ok"]
        row: list = [method, label, len(rs), len(rs) - len(ok)]
        for name, how in env.aggregate.items():
            vals = [float(m[name]) for m in ok]
            if how == "mean":
                mean = _mean(vals)
                se = math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / (len(vals) - 1) / len(vals)) if len(vals) > 1 else 0.0
                row += [mean, se]
            elif how == "finite_mean":
                finite = [v for v in vals if math.isfinite(v)]
                row.append(_mean(finite) if finite else math.inf)
            elif how == "sum":
                row.append(int(sum(vals)))
            else:
                row.append(min(vals) if vals else math.nan)
        table.append(row)
    return header, table


def _cell_str(v) -> str:
    return v if isinstance(v, str) else fmt(v)


def table_csv(header, rows) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell_str(v) for v in row])
    return out.getvalue()


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def runs_table(env_name: str, results: list[CellResult]) -> tuple[list[str], list[list]]:
    names = list(ENV[env_name].aggregate)
    header = ["method", "setting", "seed", "status", "trace", *names]
    rows = [
        [r.method, setting_label(r.setting), r.seed, r.status, r.trace_file or "", *(r.metrics.get(n, math.nan) for n in names)]
        for r in results
    ]
    return header, rows


@dataclass
class RunReport:
    output_dir: Path
    results: list
    header: list
    rows: list

    @property
    def failed(self) -> int:
        return sum(r.status != "ok" for r in self.results)


def run(spec: ExperimentSpec, workers: int | None = None, output_dir: str | Path | None = None) -> RunReport:
    """Execute every cell, then write traces, ``runs.csv``, ``summary.csv``
    and ``summary.json`` under the output directory."""
    out = Path(output_dir if output_dir is not None else spec.output_dir)
    trace_dir = out / "traces"
    trace_dir.mkdir(parents=True, exist_ok=True)
    # chunks depend on the seed list alone, never on the worker count
    jobs = [
        (spec, m, s, spec.seeds[i : i + GROUP_SEEDS], str(trace_dir))
        for m in spec.methods
        for s in spec.settings()
        for i in range(0, len(spec.seeds), GROUP_SEEDS)
    ]
    n = worker_count(workers)
    if n == 1:
        groups = [run_group(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            groups = list(pool.map(_run_group_args, jobs))
    results = [r for g in groups for r in g]
    write_tables(spec.environment, results, out)
    header, rows = summarize(spec.environment, results)
    return RunReport(out, results, header, rows)


def write_tables(env_name: str, results: list[CellResult], out: Path) -> None:
    rh, rr = runs_table(env_name, results)
    (out / "runs.csv").write_text(table_csv(rh, rr))
    header, rows = summarize(env_name, results)
    (out / "summary.csv").write_text(table_csv(header, rows))
    payload = {
        "environment": env_name,
        "rows": [{k: _jsonable(v) for k, v in zip(header, row)} for row in rows],
        "failures": [{"method": r.method, "setting": setting_label(r.setting), "seed": r.seed, "error": r.error} for r in results if r.status != "ok"],
    }
    (out / "summary.json").write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n")


def recompute(output_dir: str | Path) -> tuple[list[str], list[list]]:
    """Rebuild the summary table from ``runs.csv`` statuses and the trace files."""
    out = Path(output_dir)
    with open(out / "runs.csv", newline="") as fh:
        runs = list(csv.DictReader(fh))
    if not runs:
        raise ValueError(f"{out / 'runs.csv'} lists no runs")
    results = []
    env_name = None
    for r in runs:
        setting = dict(item.split("=", 1) for item in r["setting"].split(";")) if r["setting"] else {}
        if r["status"] != "ok":
            results.append(CellResult(r["method"], setting, int(r["seed"]), r["status"], {}))
            continue
        meta, _, data = parse_trace((out / "traces" / r["trace"]).read_text())
        env_name = meta["environment"]
        results.append(CellResult(r["method"], setting, int(r["seed"]), "ok", ENV[env_name].metrics(data, meta), r["trace"]))
    if env_name is None:
        raise ValueError("no successful runs to recompute from")
    return summarize(env_name, results)
