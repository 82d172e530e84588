"""Command line runner: ``meanfield {simulate,sweep-n,sweep-galerkin,probe,wasserstein}``.

Exit codes: 0 success, 2 configuration/input error, 3 numerical blow-up, 4 I/O error.

Model catalogue (``[model] name``, case-insensitive; short aliases in brackets):

  VarianceDrift [variance]        dX = -X^(2n-1) Var[S_N] dt + sigma dW       keys: phi_exponent, sigma*
  SvgdPolynomial [svgd]           dX = -X^(2k-1) [(2m-1) S_N(y^(2m-2)) + S_N(y^(2(m+n)-2))] dt + sigma dW
                                                                              keys: k, m, n, sigma*
  AllenCahn [allen_cahn]          dX = (Laplace X + X - S_N(X^2) X) dt + dW_Q keys: n_modes, noise_decay, noise_scale, grid_factor
  BurgersTransport [burgers]      dX = (Laplace X + d/dx(X S_N(phi(X)))) dt + dW_Q   (+ phi = tanh|sin)
  MeanCoupledHeat [heat]          dX = (Laplace X - kappa S_N(X)) dt + dW_Q    (+ kappa)

sigma*: sigma (constant) or sigma_kind = lipschitz with sigma_c1, sigma_c2, sigma_c3, sigma_bound.
"""
from __future__ import annotations

import argparse
import io
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from . import experiments as E
from .config import ConfigError, ExperimentConfig
from .integrate import BlowUpError
from .measure import sliced_w2, w2_assignment, w2_sorted_1d
from .state import dump_ensemble, load_ensemble

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_IO = 0, 2, 3, 4


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.1.0"


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, cfg: ExperimentConfig, columns, rows) -> None:
    buf = io.StringIO()
    buf.write(f"# config_hash={cfg.config_hash()} seed={cfg.seed}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    path.write_text(buf.getvalue())


def _write_meta(out: Path, cfg: ExperimentConfig, command: str) -> None:
    header = f"# meanfield {_version()}\n# command={command}\n# config_hash={cfg.config_hash()}\n# seed={cfg.seed}\n"
    (out / "meta.txt").write_text(header + cfg.echo())


def _load(args) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig.from_file(args.config)
    except FileNotFoundError:
        raise OSError(f"config file not found: {args.config}") from None
    if args.seed is not None:
        cfg.set("run", "seed", args.seed)
    cfg.validate()
    return cfg


def cmd_simulate(args, out: Path) -> int:
    cfg = _load(args)
    model = cfg.model()
    step = cfg.step_config(args.threads)
    track = cfg.get("run", "track", [0])
    result = E.simulate(model, cfg.initial_law(), cfg.n_particles, step, cfg.seed, track, cfg.get("run", "reference", False))
    dim = model.state_dim
    columns = ["t"] + [f"p{i}_c{k + 1}" for i in result.paths for k in range(dim)]
    times = result.times
    rows = [
        tuple([times[j]] + [v for i in result.paths for v in result.paths[i].states[j]])
        for j in range(times.size)
    ]
    write_csv(out / "trajectory.csv", cfg, columns, rows)
    diag = result.diagnostics
    names = list(diag)
    write_csv(out / "diagnostics.csv", cfg, names, zip(*(diag[k] for k in names)))
    dump_ensemble(result.final, out / "final_ensemble.csv")
    _write_meta(out, cfg, "simulate")
    print(f"t_end={float(times[-1])!r} m2={float(diag['m2'][-1])!r} sup_m2={float(diag['sup_m2'][-1])!r}")
    return EXIT_OK


def cmd_sweep_n(args, out: Path) -> int:
    cfg = _load(args)
    n_values = cfg.get("sweep", "n_values")
    if not n_values:
        raise ConfigError("sweep.n_values", "missing")
    table = E.sweep_n(
        cfg.model(),
        cfg.initial_law(),
        cfg.step_config(),
        n_values,
        cfg.get("sweep", "replicas", 10),
        cfg.get("sweep", "n_ref", 100_000),
        cfg.seed,
        cfg.get("sweep", "ref_seed"),
        cfg.get("sweep", "directions", 64),
        args.threads,
    )
    write_csv(out / "sweep_n.csv", cfg, table.columns, table.rows)
    _write_meta(out, cfg, "sweep-n")
    for row in table.rows:
        print(",".join(_fmt(v) for v in row))
    return EXIT_OK


def cmd_sweep_galerkin(args, out: Path) -> int:
    cfg = _load(args)
    modes = cfg.get("sweep", "modes")
    if not modes:
        raise ConfigError("sweep.modes", "missing")
    table = E.sweep_galerkin(cfg.model(), cfg.initial_law(), cfg.step_config(args.threads), modes, cfg.n_particles, cfg.seed)
    write_csv(out / "sweep_galerkin.csv", cfg, table.columns, table.rows)
    _write_meta(out, cfg, "sweep-galerkin")
    for row in table.rows:
        print(",".join(_fmt(v) for v in row))
    return EXIT_OK


def cmd_probe(args, out: Path) -> int:
    cfg = _load(args)
    try:
        table = E.probe_report(
            cfg.model(),
            cfg.get("probe", "n_tuples", 1000),
            cfg.get("probe", "check", "both"),
            cfg.seed,
            cfg.get("probe", "max_atoms", 6),
            cfg.get("probe", "rtol"),
        )
    except ValueError as err:
        raise ConfigError("probe.check", str(err)) from None
    write_csv(out / "probe.csv", cfg, table.columns, table.rows)
    _write_meta(out, cfg, "probe")
    for row in table.rows:
        print(",".join(_fmt(v) for v in row))
    return EXIT_OK


def cmd_wasserstein(args) -> int:
    try:
        a = load_ensemble(args.file_a).states
        b = load_ensemble(args.file_b).states
    except FileNotFoundError as err:
        raise OSError(str(err)) from None
    except ValueError as err:
        raise ConfigError("input", str(err)) from None
    if a.shape[1] != b.shape[1]:
        raise ConfigError("input", f"dimension mismatch ({a.shape[1]} vs {b.shape[1]})")
    if a.shape[0] != b.shape[0]:
        raise ConfigError("input", f"sample sizes differ ({a.shape[0]} vs {b.shape[0]}); resample first")
    if args.exact:
        print(f"distance {w2_assignment(a, b, max_n=args.max_n)!r}")
    elif a.shape[1] == 1:
        print(f"distance {w2_sorted_1d(a[:, 0], b[:, 0], p=args.p)!r}")
    else:
        value, se = sliced_w2(a, b, args.directions, np.random.default_rng(args.seed if args.seed is not None else 0))
        print(f"distance {value!r}")
        print(f"stderr {se!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="meanfield", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "run one interacting (or reference) simulation"),
        ("sweep-n", "W2 to a large-N reference across particle counts"),
        ("sweep-galerkin", "differences between Galerkin levels under shared noise"),
        ("probe", "random-tuple checks of coercivity / monotonicity bounds"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None, help="overrides [run] seed")
        p.add_argument("--out", default=".")
        p.add_argument("--threads", type=int, default=1)
    w = sub.add_parser("wasserstein", help="distance between two sample CSV files")
    w.add_argument("file_a")
    w.add_argument("file_b")
    w.add_argument("--exact", action="store_true", help="exact assignment W2 (small sample sets)")
    w.add_argument("--max-n", type=int, default=12)
    w.add_argument("--directions", type=int, default=128)
    w.add_argument("--p", type=int, default=2, choices=(1, 2))
    w.add_argument("--seed", type=int, default=None)
    w.add_argument("--threads", type=int, default=1)
    return parser


COMMANDS = {"simulate": cmd_simulate, "sweep-n": cmd_sweep_n, "sweep-galerkin": cmd_sweep_galerkin, "probe": cmd_probe}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "wasserstein":
            return cmd_wasserstein(args)
        if args.threads < 1:
            raise ConfigError("--threads", "must be >= 1")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, out)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as err:
        print(f"numerical blow-up: {err}", file=sys.stderr)
        return EXIT_BLOWUP
    except OSError as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
