"""Adversarial stress test of the risk bound and the lambda floor."""

import sys

from _common import parser, run

if __name__ == "__main__":
    args = parser("theory_check.yaml", __doc__).parse_args()
    _, report = run(args)
    row = dict(zip(report.header, report.rows[0]))
    sys.exit(1 if row["sum_violations"] else 0)
