#!/usr/bin/env python3
"""Underwater-vehicle benchmark: state feedback vs the three observer loops.

Writes per-scenario trajectory CSVs plus the comparison table to
results/example1/ (override with --out).  The observer scenarios share one
configuration: kappa = [2, 1], eps = 0.15, noise on [-0.01, 0.01] held at
0.1 ms, actuator limited to +/-500.
"""

import argparse
import sys

from hgobank.cli import main as hgobank_main

SCENARIOS = [
    "example1_statefb",
    "example1_hgo",
    "example1_switching",
    "example1_mhgo",
]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/example1")
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()
    argv = ["compare", "--scenarios", *SCENARIOS, "--out", args.out]
    if args.seed is not None:
        argv += ["--seed", str(args.seed)]
    return hgobank_main(argv)


if __name__ == "__main__":
    sys.exit(main())
