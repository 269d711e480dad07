#!/usr/bin/env python3
"""How fast the empirical disturbance of the |+>, sigma_z -> sigma_x scenario settles on 1/2.

Also prints the seed cost of choosing the upper path, which shrinks per run as n grows.
"""

import argparse
import math

import numpy as np

from collapse_rng.protocol import InstrumentSpec, Scenario, TestMeasurementSpec, run_protocol, seed_cost
from collapse_rng.quantum import KET_PLUS, SIGMA_X, SIGMA_Z

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--seeds", type=int, default=20)
ap.add_argument("--max-exp", type=int, default=6)
ap.add_argument("--threads", type=int, default=None)
args = ap.parse_args()

print(f"{'n':>9} {'n_u':>6} {'mean |d-1/2|':>13} {'max |d-1/2|':>12} {'5/sqrt(n_u)':>12} {'seed bits':>10} {'bits/run':>9}")
for k in range(3, args.max_exp + 1):
    n = 10**k
    n_u = math.ceil(math.sqrt(n))
    errs = []
    for seed in range(args.seeds):
        s = Scenario(KET_PLUS, InstrumentSpec(SIGMA_Z), TestMeasurementSpec(SIGMA_X), n, n_u, seed)
        errs.append(abs(run_protocol(s, threads=args.threads).d_hat - 0.5))
    cost = seed_cost(n, n_u)
    print(f"{n:9d} {n_u:6d} {np.mean(errs):13.5f} {np.max(errs):12.5f} {5 / math.sqrt(n_u):12.5f} "
          f"{cost.t_bits:10d} {cost.per_run_cost:9.5f}")
