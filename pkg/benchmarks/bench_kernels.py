"""Compare the numba and numpy solver backends on synthetic scenarios.

    python benchmarks/bench_kernels.py [--repeat 3] [--h 0.5]

Both backends run the same plans; the script checks that their value fields
are bit-identical and prints best-of-N wall times.
"""
import argparse
import time

import numpy as np

from camisplan.scenarios import flat_scenario, hills_scenario, high_slip_scenario
from camisplan.solver import node_tables, plan


def timed_plan(scenario, terrain, tables, backend, repeat):
    s = terrain.nearest_node(*scenario.start)
    g = terrain.nearest_node(*scenario.goal)
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = plan(s, g, terrain, scenario.model, tables=tables, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--h", type=float, default=0.5)
    args = ap.parse_args()

    cases = [("flat", flat_scenario(h=args.h)), ("hills", hills_scenario(h=args.h, seed=1)),
             ("high-slip", high_slip_scenario(h=args.h))]
    # compile once outside the timings
    warm = hills_scenario(h=1.0)
    wt = warm.terrain()
    timed_plan(warm, wt, node_tables(wt, warm.model), "numba", 1)

    print(f"{'scenario':<10} {'nodes':>7} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8}  identical")
    for name, sc in cases:
        terrain = sc.terrain()
        tables = node_tables(terrain, sc.model)
        t_nb, r_nb = timed_plan(sc, terrain, tables, "numba", args.repeat)
        t_np, r_np = timed_plan(sc, terrain, tables, "numpy", 1)
        same = (np.array_equal(r_nb.start_side.T, r_np.start_side.T)
                and np.array_equal(r_nb.goal_side.T, r_np.goal_side.T)
                and np.array_equal(r_nb.path, r_np.path))
        expanded = sum(r_nb.diagnostics["nodes_expanded"].values())
        print(f"{name:<10} {expanded:>7} {t_nb:>10.4f} {t_np:>10.4f} {t_np / t_nb:>8.1f}  {same}")


if __name__ == "__main__":
    main()
