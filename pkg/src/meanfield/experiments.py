"""Experiment drivers behind the CLI subcommands; each returns plain column/row tables."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import models as M
from .integrate import InitialLaw, RunResult, StepConfig, run_interacting, run_mean_field_reference
from .measure import bootstrap_resample, sliced_w2, w2_sorted_1d
from .state import ParticleEnsemble, RngPlan, StateKind

REF_SEED_OFFSET = 1_000_000


@dataclass
class Table:
    columns: list[str]
    rows: list[tuple]

    def column(self, name: str) -> np.ndarray:
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows], dtype=float)


def simulate(model: M.ModelSpec, initial: InitialLaw, n: int, cfg: StepConfig, seed: int, track=(0,), reference=False) -> RunResult:
    rng = RngPlan(seed)
    ens0 = initial.sample(n, model, rng)
    return run_interacting(model, ens0, cfg, rng, track=track, reference=reference)


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def sweep_n(
    model: M.ModelSpec,
    initial: InitialLaw,
    cfg: StepConfig,
    n_values,
    replicas: int,
    n_ref: int,
    seed: int,
    ref_seed: int | None = None,
    directions: int = 64,
    threads: int = 1,
) -> Table:
    """Mean W2 at t_end between N-particle empirical laws and a large reference ensemble.

    Replica r runs with seed ``seed + r``. The reference is resampled (bootstrap)
    to N only when sizes differ. Scalar models use the exact sorted W2; spectral
    models use the first-coefficient marginal and also report sliced W2.
    """
    ref_seed = seed + REF_SEED_OFFSET if ref_seed is None else ref_seed
    run_cfg = StepConfig(cfg.dt, cfg.t_end, cfg.scheme, cfg.n_steps or 1, 1)
    ref = run_mean_field_reference(model, n_ref, run_cfg, RngPlan(ref_seed), initial).samples()
    spectral_states = model.state_kind is StateKind.SPECTRAL_SINE

    def one(job):
        n, r = job
        samples = simulate(model, initial, n, run_cfg, seed + r, track=()).samples()
        gen = np.random.default_rng([ref_seed, n, r])
        target = ref if n == n_ref else bootstrap_resample(ref, n, gen)
        w = w2_sorted_1d(samples[:, 0], target[:, 0])
        if not spectral_states:
            return (w,)
        s, _ = sliced_w2(samples, target, directions, gen)
        return (w, s)

    columns = ["n", "mean_w2", "stderr"] + (["mean_sliced_w2", "sliced_stderr"] if spectral_states else [])
    rows = []
    for n in n_values:
        results = np.array(_map(one, [(n, r) for r in range(replicas)], threads))
        row = [int(n)]
        for j in range(results.shape[1]):
            vals = results[:, j]
            se = float(np.std(vals, ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0
            row += [float(np.mean(vals)), se]
        rows.append(tuple(row))
    return Table(columns, rows)


def sweep_galerkin(
    model: M.ModelSpec,
    initial: InitialLaw,
    cfg: StepConfig,
    modes,
    n: int,
    seed: int,
) -> Table:
    """sup_t ||X^(n_{i+1}) - X^(n_i)||_H between consecutive Galerkin levels under shared noise.

    Initial data are drawn once at the finest level and projected; the noise
    on modes 1..n is the same realization at every level.
    """
    if model.state_kind is not StateKind.SPECTRAL_SINE:
        raise ValueError("sweep-galerkin needs a spectral model")
    modes = [int(k) for k in modes]
    finest = model.with_params(n_modes=max(modes))
    rng = RngPlan(seed)
    base = initial.sample(n, finest, rng).states
    trajectories = {}
    for k in sorted(set(modes)):
        level = model.with_params(n_modes=k)
        ens0 = ParticleEnsemble(base[:, :k], StateKind.SPECTRAL_SINE)
        res = run_interacting(level, ens0, cfg, rng, track=range(n))
        trajectories[k] = np.stack([res.paths[i].states for i in range(n)])  # (N, T, k)

    rows = []
    for coarse, fine in zip(modes[:-1], modes[1:]):
        a, b = trajectories[coarse], trajectories[fine]
        width = max(coarse, fine)
        pad = lambda x: np.pad(x, ((0, 0), (0, 0), (0, width - x.shape[2])))
        diff = pad(a) - pad(b)
        sup = np.sqrt(np.max(np.einsum("itk,itk->it", diff, diff), axis=1))
        rows.append((coarse, fine, float(np.max(sup)), float(np.sqrt(np.mean(sup**2)))))
    return Table(["n_coarse", "n_fine", "sup_diff_max", "sup_diff_rms"], rows)


def probe_report(model: M.ModelSpec, n_tuples: int, check: str, seed: int, max_atoms: int = 6, rtol: float | None = None) -> Table:
    """Pass rates and worst margins of the coercivity / monotonicity probes over random tuples."""
    if check not in ("coercivity", "monotonicity", "both"):
        raise ValueError(f"unknown probe check {check!r}")
    columns = ["check", "n_tuples", "pass_rate", "worst_margin"]
    if n_tuples == 0:
        return Table(columns, [])
    gen = np.random.default_rng(seed)
    coer, mono = [], []
    for _ in range(n_tuples):
        tup = M.random_probe_tuple(model, gen, max_atoms)
        if check in ("coercivity", "both"):
            coer.append(M.probe_coercivity(model, tup.u, tup.mu, rtol=rtol))
        if check in ("monotonicity", "both"):
            mono.append(M.probe_monotonicity(model, tup.u, tup.v, tup.mu, tup.nu, tup.w2_sq))
    rows = []
    for label, results in (("coercivity", coer), ("monotonicity", mono)):
        if results:
            rate = sum(r.satisfied for r in results) / len(results)
            rows.append((label, len(results), rate, min(r.margin for r in results)))
    return Table(columns, rows)
