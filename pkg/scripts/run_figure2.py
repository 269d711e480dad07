#!/usr/bin/env python3
"""Single-shot bounds against disturbance for a tilted qubit basis pair; writes fig2.csv."""

import argparse
import sys
from pathlib import Path

from collapse_rng.certifier import figure2_tau_edge, sweep_figure2
from collapse_rng.cli import cmd_figure2, figure2_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c00", type=float, default=0.75)
    ap.add_argument("--steps", type=int, default=100)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    code = cmd_figure2(args.c00, args.steps, Path(args.out))
    rows = sweep_figure2(args.c00, figure2_grid(args.c00, args.steps))
    print(f"c00={args.c00}: T3 saturates at d={figure2_tau_edge(args.c00):.6f}, T2 at d=0.5, T1 at d=0.707107")
    print(f"{'d':>9} {'T1':>9} {'T2':>9} {'T3':>9}")
    for r in rows[:: max(1, len(rows) // 12)]:
        cells = [f"{x:9.5f}" if x is not None else f"{'-':>9}" for x in (r.thm1_bits, r.thm2_bits, r.thm3_bits)]
        print(f"{r.d:9.5f} " + " ".join(cells))
    print(f"wrote {Path(args.out) / 'fig2.csv'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
