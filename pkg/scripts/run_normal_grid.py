"""Acceptance rates and posterior medians of BSL, R-BSL-M and R-BSL-V as the
observed standard deviation moves away from the assumed value of 1."""

import sys

from _common import parser, print_table, run


def main() -> int:
    args = parser(__doc__, "normal_grid.ini").parse_args()
    status, out = run(args)
    print_table(out / "grid_summary.csv", ["value", "method", "acceptance_rate", "theta_1_median", "max_gamma_ks"])
    return status


if __name__ == "__main__":
    sys.exit(main())
