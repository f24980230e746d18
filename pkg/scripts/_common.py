"""Shared driver for the reproduction scripts."""

from __future__ import annotations

import argparse
from pathlib import Path

from conformal_decision import experiments
from conformal_decision.charts import render_chart

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def parser(config: str, description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--config", default=str(CONFIGS / config), help="experiment spec (YAML)")
    p.add_argument("--out", default=None, help="output directory (overrides output_dir in the config)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seeds", type=int, default=None, help="use only the first N seeds, for a quick look")
    return p


def run(args) -> tuple[experiments.ExperimentSpec, experiments.RunReport]:
    spec = experiments.load_spec(args.config)
    if args.seeds is not None:
        spec = experiments.ExperimentSpec(
            spec.environment, spec.methods, spec.seeds[: args.seeds], spec.output_dir, spec.params, spec.sweep
        )
    report = experiments.run(spec, workers=args.workers, output_dir=args.out)
    print(experiments.table_csv(report.header, report.rows), end="")
    return spec, report


def chart_by_group(report: experiments.RunReport, channels, ref_line=None) -> list[Path]:
    """One chart per (method, setting), overlaying all its seeds."""
    groups: dict = {}
    for r in report.results:
        if r.status == "ok":
            groups.setdefault((r.method, experiments.setting_label(r.setting)), []).append(report.output_dir / "traces" / r.trace_file)
    paths = []
    for (method, label), traces in groups.items():
        tag = f"{method}_{label}".rstrip("_").replace("=", "_").replace(";", "_")
        out = report.output_dir / "charts" / f"{tag}_{'_'.join(channels)}.svg"
        paths.append(render_chart(traces, channels, out, ref_line, title=f"{method} {label}".strip()))
    return paths
