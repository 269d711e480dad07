#!/usr/bin/env python3
"""Why the instrument has to follow the Lueders rule: non-Lueders realizations of sigma_z."""

import argparse

import numpy as np

from collapse_rng.oracle import adversarial_realization_demo

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--seed", type=int, default=0)
ap.add_argument("--attempts", type=int, default=20_000)
args = ap.parse_args()

np.set_printoptions(precision=4, suppress=True)
for case in adversarial_realization_demo(args.seed, args.attempts):
    naive = "n/a" if case.naive_bound_bits is None else f"{case.naive_bound_bits:.4f}"
    print(f"[{case.label}]")
    print(f"  disturbance {case.disturbance:.4f} (Lueders would give {case.lueders_disturbance:.4f}), "
          f"collision uncertainty {case.uncertainty:.4f}")
    print(f"  naive T1 bound {naive} bits vs true min-entropy {case.true_hmin_bits:.4f} bits "
          f"-> {'sound' if case.sound else 'UNSOUND'}")
    if case.label == "searched_counterexample":
        print("  rho =\n", case.rho)
        for k, u in enumerate(case.unitaries):
            print(f"  U_{k} =\n", u)
