"""Toad movement model on simulated data (or real data with
--config configs/optional/toad_real.ini); prints the adjustment components
whose posterior departs from the prior."""

import csv
import sys

from _common import parser, run


def main() -> int:
    args = parser(__doc__, "toad_synthetic.ini").parse_args()
    status, out = run(args)
    found = sorted(out.rglob("diagnostics.csv"))
    if not found:
        print("no gamma diagnostics: they need at least 100 post-burn-in iterations")
    for diag in found:
        with diag.open() as fh:
            rows = list(csv.DictReader(fh))
        flagged = [r["component"] for r in rows if r["flag"] == "incompatible"]
        worst = max(float(r["ks_statistic"]) for r in rows)
        print(f"{diag.parent.relative_to(out) or '.'}: max KS {worst:.3f}; flagged {flagged or 'none'}")
    return status


if __name__ == "__main__":
    sys.exit(main())
