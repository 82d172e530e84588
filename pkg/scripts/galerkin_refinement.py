"""Sup-in-time H distance between consecutive Galerkin levels under shared noise.

Usage: python scripts/galerkin_refinement.py [--model allen_cahn] [--seeds 10]
"""
import argparse

from meanfield import models as M
from meanfield.experiments import sweep_galerkin
from meanfield.integrate import DEFAULT_INITIAL, StepConfig, default_scheme

parser = argparse.ArgumentParser()
parser.add_argument("--model", default="allen_cahn")
parser.add_argument("--modes", default="8,16,32,64")
parser.add_argument("--particles", type=int, default=8)
parser.add_argument("--seeds", type=int, default=10)
parser.add_argument("--dt", type=float, default=1e-3)
parser.add_argument("--t-end", type=float, default=0.5)
args = parser.parse_args()

model = M.make_model(args.model)
modes = [int(k) for k in args.modes.split(",")]
cfg = StepConfig(args.dt, args.t_end, default_scheme(model))
print("seed  " + "  ".join(f"{a:>3d}->{b:<3d}" for a, b in zip(modes[:-1], modes[1:])) + "  ordered")
for seed in range(1, args.seeds + 1):
    d = sweep_galerkin(model, DEFAULT_INITIAL[model.name], cfg, modes, args.particles, seed).column("sup_diff_max")
    ordered = all(b < a for a, b in zip(d[:-1], d[1:]))
    print(f"{seed:>4d}  " + "  ".join(f"{x:9.2e}" for x in d) + f"  {ordered}")
