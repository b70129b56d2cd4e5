#!/usr/bin/env python3
"""CATE benchmark grid: rho in {0, 1} by treated fraction in {0.2, 0.3, 0.5}.

Writes summary.csv and replications.csv (long format, for violin plots) to
--output and prints the summary table.
"""

import argparse

from complier.cli import simulate_command
from complier.config import RunConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=1000)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--seed", type=int, default=20230101)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--output", default="results/benchmark")
    a = ap.parse_args()
    cfg = RunConfig(mode="simulate", reps=a.reps, n=a.n, seed=a.seed, workers=a.workers,
                    rho=(0.0, 1.0), n1_frac=(0.2, 0.3, 0.5), output_path=a.output).validate()
    simulate_command(cfg)


if __name__ == "__main__":
    main()
