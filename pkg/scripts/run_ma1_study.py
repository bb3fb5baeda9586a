"""Repeated-sampling study: MA(1) fitted to stochastic-volatility data.

Prints bias, RMSE, interval length and coverage against the pseudo-true
value 0 for every method in the config."""

import sys

from _common import parser, print_table, run


def main() -> int:
    args = parser(__doc__, "ma1_sv.ini").parse_args()
    status, out = run(args)
    print_table(out / "accuracy.csv", ["method", "bias", "rmse", "length", "coverage", "runs"])
    return status


if __name__ == "__main__":
    sys.exit(main())
