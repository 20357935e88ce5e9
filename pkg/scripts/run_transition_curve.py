#!/usr/bin/env python3
"""Magnetization across the thermal transition at h = (2/3) h0.

Default is the smoke regime (D=3, M=8, minutes).  Pass --full for the
converged regime (D=6, M=16, fine steps near the transition; many hours) --
checkpoints land in the run directory so interrupted runs can resume with
`thermalpeps evolve-infinite --resume <checkpoint> ...`.
"""

import sys

from thermalpeps.cli import main

SMOKE = [
    "evolve-infinite",
    "--h-frac", "0.666667",
    "--delta", "1e-6",
    "--D", "3",
    "--M", "8",
    "--schedule", "0.40:0.008814,0.75:0.004407",
    "--outdir", "run-transition-smoke",
    "--checkpoint-stride", "20",
    "--verbose",
]

FULL = [
    "evolve-infinite",
    "--h-frac", "0.666667",
    "--delta", "1e-6",
    "--D", "6",
    "--M", "16",
    "--schedule", "0.45:0.004407,0.56:0.0011,0.64:0.000441,0.80:0.0011",
    "--outdir", "run-transition-full",
    "--checkpoint-stride", "100",
    "--verbose",
]

if __name__ == "__main__":
    args = sys.argv[1:]
    full = "--full" in args
    args = [a for a in args if a != "--full"]
    sys.exit(main((FULL if full else SMOKE) + args))
