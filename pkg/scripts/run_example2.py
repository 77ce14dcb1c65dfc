#!/usr/bin/env python3
"""Coupled pendulum-cart benchmark: observer-bank fusion vs best-of-bank selection.

Runs the N=3 comparison by default; --full adds the N=81 banks (the
selection bank finishes in seconds, the fused bank takes ~30 s).  Results go
to results/example2/ (override with --out).
"""

import argparse
import sys

from hgobank.cli import main as hgobank_main

BASE = [
    "example2_statefb",
    "example2_hgo",
    "example2_multiobs_n3",
    "example2_mhgo_n3",
]
FULL = ["example2_multiobs_n81", "example2_mhgo_n81"]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/example2")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--full", action="store_true", help="include the N=81 banks")
    args = parser.parse_args()
    scenarios = BASE + (FULL if args.full else [])
    argv = ["compare", "--scenarios", *scenarios, "--out", args.out]
    if args.seed is not None:
        argv += ["--seed", str(args.seed)]
    return hgobank_main(argv)


if __name__ == "__main__":
    sys.exit(main())
