#!/usr/bin/env python3
"""Classical critical-point scaling versus the environment dimension.

Runs the benchmark behind the M-scaling figures (correlation length growth,
spontaneous-magnetization decay, power-law exponent drift) and writes the
scaling table plus per-M correlator files.  Equivalent to:

    thermalpeps onsager-bench --M 8,12,16,24,32 --outdir run-bench
"""

import sys

from thermalpeps.cli import main

if __name__ == "__main__":
    args = ["onsager-bench", "--M", "8,12,16,24,32", "--outdir", "run-bench", "--verbose"]
    sys.exit(main(args + sys.argv[1:]))
