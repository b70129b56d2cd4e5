#!/usr/bin/env python3
"""Multiplicative-effect Monte Carlo at n=500, rho=1, half treated."""

import argparse

from complier.reporting import render_summary
from complier.simulation import DgpParams, generate_population, monte_carlo, population_truth

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--reps", type=int, default=1000)
ap.add_argument("--seed", type=int, default=20230101)
ap.add_argument("--workers", type=int, default=1)
a = ap.parse_args()

p = DgpParams(n=500, rho=1.0, n1_frac=0.5, seed=a.seed)
pop = generate_population(p)
print(f"true MCATE {population_truth(pop)['mcate']:.4f}")
rows = monte_carlo(pop, a.reps, p.n1, master_seed=a.seed, estimands=("mcate",), workers=a.workers)
print(render_summary(rows))
