#!/usr/bin/env python3
"""Certified bits on the |+>, sigma_z -> sigma_x scenario as the declared device noise grows."""

import argparse

from collapse_rng.certifier import NoiseParams, Theorem, TrustLevel, certify
from collapse_rng.protocol import InstrumentSpec, TestMeasurementSpec, depolarized_lueders, empirical_epsilons
from collapse_rng.quantum import KET_PLUS, SIGMA_X, SIGMA_Z, lueders_channel, outcome_distribution, overlap_matrix, tv_distance

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--steps", type=int, default=10)
ap.add_argument("--max-eps", type=float, default=0.1)
args = ap.parse_args()

level = TrustLevel.trusted(overlap_matrix(SIGMA_Z, SIGMA_X))
q = outcome_distribution(SIGMA_X, KET_PLUS)
qp = outcome_distribution(SIGMA_X, lueders_channel(SIGMA_Z, KET_PLUS))
d = tv_distance(q, qp)

print(f"{'eps_a':>6} {'eps_b':>6} {'T1':>8} {'T2':>8} {'T3':>8} {'T5':>8}  eps_a seen (depolarized A)")
for i in range(args.steps + 1):
    eps = args.max_eps * i / args.steps
    bounds = {b.theorem: b.bits for b in certify(q, qp, d, level, NoiseParams(eps, eps / 2))}
    seen, _ = empirical_epsilons(depolarized_lueders(SIGMA_Z, eps), TestMeasurementSpec(SIGMA_X), 300, seed=i)
    print(f"{eps:6.3f} {eps / 2:6.3f} " + " ".join(f"{bounds[t]:8.5f}" for t in (Theorem.T1, Theorem.T2, Theorem.T3, Theorem.T5))
          + f"  {seen:.4f}")
