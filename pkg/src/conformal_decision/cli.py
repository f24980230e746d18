"""Command-line entry point: ``run``, ``chart`` and ``validate``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiments

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2


def _cmd_validate(args) -> int:
    try:
        spec = experiments.load_spec(args.spec)
    except experiments.SpecError as exc:
        print(f"invalid spec: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"ok: {spec.environment}, {len(spec.cells())} cells")
    return EXIT_OK


def _cmd_run(args) -> int:
    try:
        spec = experiments.load_spec(args.spec)
    except experiments.SpecError as exc:
        print(f"invalid spec: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        report = experiments.run(spec, workers=args.workers, output_dir=args.out)
    except OSError as exc:
        print(f"cannot write results: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(experiments.table_csv(report.header, report.rows), end="")
    print(f"wrote {len(report.results) - report.failed} traces to {report.output_dir / 'traces'}")
    if report.failed:
        for r in report.results:
            if r.status != "ok":
                print(f"cell failed: {r.method} {experiments.setting_label(r.setting)} seed={r.seed}: {r.error.splitlines()[0]}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_chart(args) -> int:
    from .charts import ChannelError, render_chart

    out = args.out or str(Path(args.traces[0]).with_suffix("")) + "_" + "_".join(args.channel) + ".svg"
    try:
        path = render_chart(args.traces, args.channel, out, args.ref_line, args.title)
    except ChannelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conformal-decision", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run every (method, setting, seed) cell of a spec")
    p.add_argument("spec")
    p.add_argument("--workers", type=int, default=1, help=f"worker processes (capped by ${experiments.WORKERS_ENV})")
    p.add_argument("--out", default=None, help="output directory (overrides output_dir in the experiment file)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("chart", help="render trace channels to an SVG line chart")
    p.add_argument("traces", nargs="+")
    p.add_argument("--channel", action="append", required=True, help="column to plot; repeat for stacked panels")
    p.add_argument("--ref-line", type=float, default=None, help="dashed horizontal reference, e.g. the target risk")
    p.add_argument("--title", default=None)
    p.add_argument("--out", default=None, help="output .svg path")
    p.set_defaults(func=_cmd_chart)

    p = sub.add_parser("validate", help="check a spec without running it")
    p.add_argument("spec")
    p.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", 1) is not None and getattr(args, "workers", 1) < 1:
        print("--workers must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
