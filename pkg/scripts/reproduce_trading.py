"""Hourly trading: yearly loss and return of each strategy per correlation."""

from _common import chart_by_group, parser, run

if __name__ == "__main__":
    args = parser("trading.yaml", __doc__).parse_args()
    _, report = run(args)
    for p in chart_by_group(report, ["cum_loss", "cum_return"]):
        print(p)
