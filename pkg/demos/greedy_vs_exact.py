"""Greedy ratio heuristic against the exhaustive oracle on random instances.

Run: python3 demos/greedy_vs_exact.py
"""
import math
import time

import numpy as np

from coil.ufl import random_instance, solve_exact, solve_greedy

rng = np.random.default_rng(0)

print(f"{'size':>5} {'mean ratio':>11} {'worst':>7} {'ln n + 1':>9} {'speedup':>8}")
for size in (4, 8, 12, 16):
    ratios, speedups = [], []
    for _ in range(10):
        inst = random_instance(rng, size, size)
        t0 = time.perf_counter()
        g = solve_greedy(inst)
        t1 = time.perf_counter()
        e = solve_exact(inst)
        t2 = time.perf_counter()
        ratios.append(g.total_cost / e.total_cost)
        speedups.append((t2 - t1) / (t1 - t0))
    print(f"{size:>5} {np.mean(ratios):>11.4f} {max(ratios):>7.4f} "
          f"{math.log(size) + 1:>9.3f} {np.median(speedups):>7.1f}x")

# the greedy keeps a log of its rounds; open costs are only ever paid once
inst = random_instance(rng, 6, 4)
steps = []
solve_greedy(inst, trace=steps)
print("\nrounds on a 6-demand instance:")
for s in steps:
    print(f"  facility {s.facility} takes demands {list(s.demands)} at ratio {s.ratio:.2f}"
          f" (paid open cost {s.paid_open_cost:.2f})")
