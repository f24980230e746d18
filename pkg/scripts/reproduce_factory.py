"""Factory speed control: empirical risk and utility of every policy."""

from _common import chart_by_group, parser, run

if __name__ == "__main__":
    args = parser("factory.yaml", __doc__).parse_args()
    spec, report = run(args)
    for p in chart_by_group(report, ["lambda", "risk"], ref_line=float(spec.params["epsilon"])):
        print(p)
