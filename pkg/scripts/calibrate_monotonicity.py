"""Fit the frozen monotonicity-probe constants C (one pass per model, default parameters).

Usage: python scripts/calibrate_monotonicity.py [n_tuples]
"""
import sys
import time

from meanfield import models as M

n = int(sys.argv[1]) if len(sys.argv) > 1 else 100_000
for name in M.ModelName:
    t0 = time.perf_counter()
    c = M.calibrate_monotonicity(M.make_model(name), n)
    print(f"{name.value:18s} C = {c:.6g}   ({time.perf_counter() - t0:.1f}s)")
