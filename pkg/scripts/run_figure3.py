#!/usr/bin/env python3
"""Worst/best KL bound over compatible qubit states next to the uncertainty baseline; writes fig3.csv."""

import argparse
import sys
import time
from pathlib import Path

from collapse_rng.certifier import figure3_grid, sweep_figure3
from collapse_rng.cli import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", type=float, default=0.62)
    ap.add_argument("--steps", type=int, default=100)
    ap.add_argument("--budget", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    t0 = time.perf_counter()
    rows = sweep_figure3(args.c, figure3_grid(args.steps), args.budget, args.seed)
    elapsed = time.perf_counter() - t0
    write_csv(
        Path(args.out) / "fig3.csv",
        ("q0", "baseline_bits", "kl_min_bits", "kl_max_bits"),
        [(r.q0, r.baseline_bits, r.kl_min_bits, r.kl_max_bits) for r in rows],
    )
    worst_gap = min(r.kl_min_bits - r.baseline_bits for r in rows)
    print(f"c={args.c}, {len(rows)} points, budget {args.budget}: {elapsed:.2f} s")
    print(f"smallest (min KL - baseline) = {worst_gap:.3g} bits")
    print(f"{'q0':>6} {'baseline':>9} {'KL min':>9} {'KL max':>9}")
    for r in rows[:: max(1, len(rows) // 10)]:
        print(f"{r.q0:6.2f} {r.baseline_bits:9.5f} {r.kl_min_bits:9.5f} {r.kl_max_bits:9.5f}")
    return 0 if worst_gap >= -1e-9 else 1


if __name__ == "__main__":
    sys.exit(main())
