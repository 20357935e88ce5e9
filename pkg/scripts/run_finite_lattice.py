#!/usr/bin/env python3
"""Open 11x11 lattice with the diagonal ZZ correlator between (3,3) and
(9,9), in the converged regime D=5, M_mps=16 (long).  A quicker 5x5 variant
runs with --small."""

import sys

from thermalpeps.cli import main

FULL = [
    "evolve-finite",
    "--n", "11",
    "--h-frac", "0.666667",
    "--delta", "0",
    "--D", "5",
    "--m-mps", "16",
    "--dbeta", "0.005",
    "--beta-max", "1.2",
    "--sample-stride", "20",
    "--correlate", "3,3:9,9",
    "--outdir", "run-finite-11x11",
    "--verbose",
]

SMALL = [
    "evolve-finite",
    "--n", "5",
    "--h-frac", "0.666667",
    "--delta", "0",
    "--D", "4",
    "--m-mps", "16",
    "--dbeta", "0.01",
    "--beta-max", "1.0",
    "--sample-stride", "10",
    "--correlate", "1,1:3,3",
    "--outdir", "run-finite-5x5",
    "--verbose",
]

if __name__ == "__main__":
    args = sys.argv[1:]
    small = "--small" in args
    args = [a for a in args if a != "--small"]
    sys.exit(main((SMALL if small else FULL) + args))
