"""Crowd navigation: safety, success and time-to-goal of each planner."""

from _common import chart_by_group, parser, run

if __name__ == "__main__":
    args = parser("nav.yaml", __doc__).parse_args()
    _, report = run(args)
    # the distance target is the magnitude of the (negative) risk threshold
    for p in chart_by_group(report, ["lambda", "min_dist"], ref_line=2.0):
        print(p)
