#!/usr/bin/env python3
"""Tabulate the attacker's evasion probability P(C, d, n) against the
control-round fraction C, and cross-check the closed form against a direct
simulation of the detection process.

Usage: python scripts/evasion_sweep.py [--d D] [--trials T] [--seed S]
"""

import argparse

import numpy as np

from duplexqkd import evasion_probability


def simulate(c: float, d: float, n: int, trials: int, rng: np.random.Generator) -> float:
    messages = np.zeros(trials, dtype=np.int64)
    failed = np.zeros(trials, dtype=bool)
    done = np.zeros(trials, dtype=bool)
    while not done.all():
        live = ~done
        is_control = rng.random(trials) < c
        failed |= live & is_control & (rng.random(trials) < d)
        messages += live & ~is_control
        done = failed | (messages >= n)
    return float(((messages >= n) & ~failed).mean())


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--d", type=float, default=0.25, help="per-check detection rate")
    parser.add_argument("--trials", type=int, default=20_000, help="simulation trials per cell")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    ns = (1, 2, 5, 10, 20)
    print(f"evasion probability at detection rate d = {args.d}")
    header = "  ".join(f"n={n:<3d}(sim)   " for n in ns)
    print(f"{'C':>5}  {header}")
    for c10 in range(0, 10):
        c = c10 / 10.0
        cells = []
        for n in ns:
            closed = evasion_probability(c, args.d, n)
            sim = simulate(c, args.d, n, args.trials, rng)
            cells.append(f"{closed:.4f}({sim:.3f})")
        print(f"{c:>5.1f}  " + "  ".join(cells))
    print("\nany positive control fraction drives the evasion probability to zero as n grows")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
