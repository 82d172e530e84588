"""Mean W2 between N-particle laws and a large mean-field reference, for a range of N.

Usage: python scripts/propagation_of_chaos.py [--model variance] [--replicas 50] [--n-ref 100000]
"""
import argparse
import time

from meanfield import models as M
from meanfield.experiments import sweep_n
from meanfield.integrate import DEFAULT_INITIAL, StepConfig, default_scheme

parser = argparse.ArgumentParser()
parser.add_argument("--model", default="variance")
parser.add_argument("--n-values", default="16,64,256,1024")
parser.add_argument("--replicas", type=int, default=50)
parser.add_argument("--n-ref", type=int, default=100_000)
parser.add_argument("--dt", type=float, default=1e-3)
parser.add_argument("--t-end", type=float, default=1.0)
parser.add_argument("--seed", type=int, default=3)
parser.add_argument("--threads", type=int, default=1)
args = parser.parse_args()

model = M.make_model(args.model)
cfg = StepConfig(args.dt, args.t_end, default_scheme(model))
t0 = time.perf_counter()
table = sweep_n(
    model,
    DEFAULT_INITIAL[model.name],
    cfg,
    [int(n) for n in args.n_values.split(",")],
    args.replicas,
    args.n_ref,
    args.seed,
    threads=args.threads,
)
print(" ".join(f"{c:>14s}" for c in table.columns))
for row in table.rows:
    print(" ".join(f"{v:>14d}" if isinstance(v, int) else f"{v:>14.6f}" for v in row))
# sqrt(N) W2 roughly flat means the decay is close to N^(-1/2); nothing is asserted about it
for n, w in zip(table.column("n"), table.column("mean_w2")):
    print(f"N={int(n):>6d}  sqrt(N)*W2 = {w * n**0.5:.4f}")
print(f"({time.perf_counter() - t0:.0f}s)")
