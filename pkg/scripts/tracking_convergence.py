"""Tracking error versus fleet size on the demo signal.

For each fleet size writes results/convergence_n<N>.csv with per-appliance power and its
target, then prints the RMSE table and successive ratios (ideal ratio sqrt(size ratio)).
"""
import argparse
import time
from pathlib import Path

import numpy as np

from tclsim import FleetSpec, StepPolicy, aggregate_metrics, demo_signal, generate_fleet, simulate
from tclsim.signals import DEMO_HORIZON


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1_000, 10_000, 100_000])
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.out.mkdir(exist_ok=True)

    rmse = {}
    for n in args.sizes:
        fleet = generate_fleet(FleetSpec(n, seed=args.seed))
        start = time.perf_counter()
        trace = simulate(fleet, demo_signal(), StepPolicy(), DEMO_HORIZON, seed=args.seed, workers=args.workers)
        wall = time.perf_counter() - start
        m = aggregate_metrics(trace)
        rmse[n] = m.rmse_w
        np.savetxt(args.out / f"convergence_n{n}.csv",
                   np.column_stack([trace.t_s, trace.power_w_per_appliance, trace.expected_power_w]),
                   delimiter=",", fmt="%.6g", comments="", header="t_s,power_w_per_appliance,expected_power_w")
        print(f"N={n:>7d}  {m.summary()}  wall_s={wall:.1f}")
    for a, b in zip(args.sizes, args.sizes[1:]):
        print(f"RMSE ratio N={a}/N={b}: {rmse[a] / rmse[b]:.2f} (ideal {np.sqrt(b / a):.2f})")


if __name__ == "__main__":
    main()
