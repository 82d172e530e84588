"""Time stepping for the N-particle system and the large-N reference ensemble.

The empirical measure is frozen at the start of each Euler-Maruyama step
and all particles move simultaneously. RK4 (noise-free models only) treats
the whole N-particle system as one ODE and rebuilds the measure at every
stage; freezing it over the step would cap the scheme at first order.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import models as M
from .state import (
    INIT_PURPOSE,
    MeasureSnapshot,
    ParticleEnsemble,
    PathRecord,
    RngPlan,
    StateKind,
    canonical_mean,
    h_norms,
    v_norms,
)


class Scheme(enum.Enum):
    EXPLICIT_EM = "ExplicitEM"
    SEMI_IMPLICIT_EM = "SemiImplicitEM"
    RK4 = "RK4"


_SCHEME_ALIASES = {"explicit": Scheme.EXPLICIT_EM, "em": Scheme.EXPLICIT_EM, "semi_implicit": Scheme.SEMI_IMPLICIT_EM,
                   "semi-implicit": Scheme.SEMI_IMPLICIT_EM, "rk4": Scheme.RK4}


def scheme_from_str(text: str) -> Scheme:
    for s in Scheme:
        if text == s.value or text.lower() == s.value.lower():
            return s
    try:
        return _SCHEME_ALIASES[text.lower()]
    except KeyError:
        raise ValueError(f"unknown scheme {text!r}") from None


class BlowUpError(RuntimeError):
    def __init__(self, t: float, diagnostics: dict | None = None):
        super().__init__(f"blow-up detected at t={t!r}")
        self.t = t
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class StepConfig:
    dt: float
    t_end: float
    scheme: Scheme = Scheme.EXPLICIT_EM
    record_stride: int = 1
    threads: int = 1

    def __post_init__(self):
        if not (self.dt > 0) or not math.isfinite(self.dt):
            raise ValueError("dt must be a positive finite number")
        if not (self.t_end > 0):
            raise ValueError("t_end must be positive")
        if self.dt > self.t_end:
            raise ValueError(f"dt={self.dt} exceeds t_end={self.t_end}")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def validate_for(self, model: M.ModelSpec) -> None:
        if self.scheme is Scheme.RK4 and model.noise_kind is not M.NoiseKind.NONE:
            raise ValueError("RK4 is only available for noise-free models")
        if self.scheme is Scheme.SEMI_IMPLICIT_EM and M.stiff_diagonal(model) is None:
            raise ValueError(f"{model.name.value} has no stiff linear part for the semi-implicit scheme")


DIAGNOSTIC_COLUMNS = ("t", "m2", "m4", "sup_m2", "sup_m4", "int_v2", "int_h2v2", "mean0", "var0")


@dataclass
class RunResult:
    """Final ensemble, tracked paths and the moment diagnostics at recorded times.

    Diagnostics: m2, m4 = (1/N) sum ||X||_H^q at t; sup_* their running sup over
    every integrator step; int_v2 and int_h2v2 the left-endpoint integrals
    of (1/N) sum ||X||_V^2 and (1/N) sum ||X||_H^2 ||X||_V^2; mean0/var0 the
    empirical mean and variance of the first coordinate.
    """

    final: ParticleEnsemble
    paths: dict[int, PathRecord]
    diagnostics: dict[str, np.ndarray]
    reference: bool = False

    @property
    def times(self) -> np.ndarray:
        return self.diagnostics["t"]

    def marginal(self, coordinate: int = 0) -> np.ndarray:
        """Samples of one coordinate at the final time."""
        return self.final.states[:, coordinate].copy()

    def samples(self) -> np.ndarray:
        return self.final.states.copy()


# ---------------------------------------------------------------- stepping


# Overflow is expected on the way to a blow-up, which is reported explicitly.
_quiet = np.errstate(over="ignore", invalid="ignore")


@_quiet
def _drift_rows(model, t, states, inter) -> np.ndarray:
    return M.drift_batch(model, t, states, inter)


def _drift(model, t, states, inter, threads) -> np.ndarray:
    n = states.shape[0]
    if threads <= 1 or n < 2 * threads:
        return _drift_rows(model, t, states, inter)
    bounds = np.linspace(0, n, threads + 1).astype(int)
    chunks = [(bounds[i], bounds[i + 1]) for i in range(threads)]
    out = np.empty_like(states)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = pool.map(lambda ab: _drift_rows(model, t, states[ab[0]:ab[1]], inter), chunks)
        for (a, b), part in zip(chunks, parts):
            out[a:b] = part
    return out


def _noise(model, t, states, inter, ensemble: ParticleEnsemble, dt, rng: RngPlan, step: int) -> np.ndarray:
    diff = M.diffusion_batch(model, t, states, inter)
    if diff.kind is M.NoiseKind.NONE:
        return np.zeros_like(states)
    n_streams = int(ensemble.stream_ids.max()) + 1
    z = rng.normals(step, n_streams, states.shape[1])[ensemble.stream_ids]
    amp = diff.amplitude
    if diff.kind is M.NoiseKind.LIPSCHITZ_SCALAR:
        amp = np.asarray(amp).reshape(states.shape[0], -1)
    return amp * math.sqrt(dt) * z


def step_interacting(
    ensemble: ParticleEnsemble,
    model: M.ModelSpec,
    t: float,
    cfg: StepConfig,
    rng: RngPlan | None,
    step: int = 0,
) -> ParticleEnsemble:
    """Advance every particle by one step of ``cfg.dt``; ``step`` indexes the noise counter."""
    X = ensemble.states
    dt = cfg.dt
    snap = MeasureSnapshot(X, ensemble.kind)
    inter = M.interaction(model, snap)
    if cfg.scheme is Scheme.RK4:
        new = _rk4(model, t, X, dt, ensemble.kind, cfg.threads)
    else:
        drift = _drift(model, t, X, inter, cfg.threads)
        noise = _noise(model, t, X, inter, ensemble, dt, rng, step) if model.noise_kind is not M.NoiseKind.NONE else 0.0
        if cfg.scheme is Scheme.EXPLICIT_EM:
            new = X + drift * dt + noise
        else:
            lam = M.stiff_diagonal(model)
            new = (X + (drift + lam * X) * dt + noise) / (1.0 + lam * dt)
    if not np.all(np.isfinite(new)):
        raise BlowUpError(t + dt, {"last_finite_m2": float(canonical_mean(h_norms(X, ensemble.kind) ** 2))})
    return ensemble.with_states(new)


def _rk4(model, t, X, dt, kind, threads):
    def f(s, Y):
        return _drift(model, s, Y, M.interaction(model, MeasureSnapshot(Y, kind)), threads)

    k1 = f(t, X)
    k2 = f(t + dt / 2, X + dt / 2 * k1)
    k3 = f(t + dt / 2, X + dt / 2 * k2)
    k4 = f(t + dt, X + dt * k3)
    return X + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


@_quiet
def run_interacting(
    model: M.ModelSpec,
    ensemble0: ParticleEnsemble,
    cfg: StepConfig,
    rng: RngPlan | None,
    track=(0,),
    reference: bool = False,
) -> RunResult:
    """Integrate to ``cfg.t_end``, recording tracked paths and diagnostics every ``record_stride`` steps."""
    cfg.validate_for(model)
    if ensemble0.kind is not model.state_kind or ensemble0.state_dim != model.state_dim:
        raise ValueError(
            f"{model.name.value} expects {model.state_kind.value} states of dim {model.state_dim}, "
            f"got {ensemble0.kind.value} dim {ensemble0.state_dim}"
        )
    track = [i for i in track if i < ensemble0.n_particles]
    kind = ensemble0.kind
    n_steps = cfg.n_steps
    dt = cfg.dt
    alpha = 2.0

    rows: list[tuple] = []
    path_states = {i: [] for i in track}
    path_h = {i: [] for i in track}
    path_cum = {i: [] for i in track}
    cum = {i: 0.0 for i in track}
    sup2 = sup4 = 0.0
    int_v2 = int_h2v2 = 0.0

    ens = ensemble0
    for step in range(n_steps + 1):
        t = step * dt
        X = ens.states
        h = h_norms(X, kind)
        v = v_norms(X, kind)
        h2, v2 = h * h, v * v
        # one stacked reduction; each column is reduced independently
        m2, m4, mv2, mh2v2 = canonical_mean(np.stack([h2, h2 * h2, v2, h2 * v2], axis=1)).tolist()
        sup2, sup4 = max(sup2, m2), max(sup4, m4)
        if step % cfg.record_stride == 0 or step == n_steps:
            col = X[:, 0]
            mean0 = float(canonical_mean(col))
            var0 = float(canonical_mean((col - mean0) ** 2))
            rows.append((t, m2, m4, sup2, sup4, int_v2, int_h2v2, mean0, var0))
            for i in track:
                path_states[i].append(X[i].copy())
                path_h[i].append(h[i])
                path_cum[i].append(cum[i])
        if step == n_steps:
            break
        int_v2 += mv2 * dt
        int_h2v2 += mh2v2 * dt
        for i in track:
            cum[i] += v[i] ** alpha * dt
        try:
            ens = step_interacting(ens, model, t, cfg, rng, step)
        except BlowUpError as err:
            err.diagnostics.update({"sup_m2": sup2, "sup_m4": sup4})
            raise

    table = np.array(rows)
    diagnostics = {name: table[:, j].copy() for j, name in enumerate(DIAGNOSTIC_COLUMNS)}
    times = diagnostics["t"]
    paths = {
        i: PathRecord(times.copy(), np.array(path_states[i]), np.array(path_h[i]), np.array(path_cum[i]), alpha, kind)
        for i in track
    }
    return RunResult(ens, paths, diagnostics, reference)


# ---------------------------------------------------------------- initial laws


@dataclass(frozen=True)
class InitialLaw:
    """Law of the i.i.d. initial particles.

    kind:
      ``gaussian``  scalar N(mean, std^2)
      ``scaled_m2`` scalar standard normals rescaled so the empirical m2 equals ``m2`` exactly
      ``mode``      spectral: a_1 = ``amplitude`` plus i.i.d. N(0, (std k^-decay)^2) perturbations
    """

    kind: str = "gaussian"
    mean: float = 0.0
    std: float = 1.0
    m2: float = 1.0
    amplitude: float = 1.0
    decay: float = 2.0

    def sample(self, n: int, model: M.ModelSpec, rng: RngPlan) -> ParticleEnsemble:
        gen = rng.child(INIT_PURPOSE).generator(0)
        dim = model.state_dim
        if self.kind == "gaussian":
            x = self.mean + self.std * gen.standard_normal((n, dim))
        elif self.kind == "scaled_m2":
            x = gen.standard_normal((n, dim))
            x *= math.sqrt(self.m2 / float(np.mean(x**2)))
        elif self.kind == "mode":
            k = np.arange(1, dim + 1, dtype=float)
            x = self.std * k ** (-self.decay) * gen.standard_normal((n, dim))
            x[:, 0] += self.amplitude
        else:
            raise ValueError(f"unknown initial law {self.kind!r}")
        return ParticleEnsemble(x, model.state_kind)


DEFAULT_INITIAL = {
    M.ModelName.VARIANCE_DRIFT: InitialLaw("gaussian", mean=1.0, std=1.0),
    M.ModelName.SVGD_POLYNOMIAL: InitialLaw("scaled_m2", m2=1.0),
    M.ModelName.ALLEN_CAHN: InitialLaw("mode", amplitude=1.0, std=0.5),
    M.ModelName.BURGERS_TRANSPORT: InitialLaw("mode", amplitude=1.0, std=0.5),
    M.ModelName.MEAN_COUPLED_HEAT: InitialLaw("mode", amplitude=1.0, std=0.5),
}


def default_scheme(model: M.ModelSpec) -> Scheme:
    if model.state_kind is StateKind.SPECTRAL_SINE:
        return Scheme.SEMI_IMPLICIT_EM
    return Scheme.RK4 if model.noise_kind is M.NoiseKind.NONE else Scheme.EXPLICIT_EM


def run_mean_field_reference(
    model: M.ModelSpec,
    n_ref: int,
    cfg: StepConfig,
    rng: RngPlan,
    initial: InitialLaw | None = None,
) -> RunResult:
    """Large-N ensemble standing in for the mean-field law; same code path as :func:`run_interacting`."""
    initial = initial or DEFAULT_INITIAL[model.name]
    ens0 = initial.sample(n_ref, model, rng)
    return run_interacting(model, ens0, cfg, rng, track=(), reference=True)


def exchangeability_check(
    model: M.ModelSpec,
    ensemble0: ParticleEnsemble,
    permutation,
    cfg: StepConfig,
    seed: int,
) -> bool:
    """Run plainly and with particles (and their noise streams) relabelled; compare bit-for-bit."""
    perm = np.asarray(permutation)
    n = ensemble0.n_particles
    if sorted(perm.tolist()) != list(range(n)):
        raise ValueError("permutation must be a bijection on the particle indices")
    rng = RngPlan(seed)
    plain = run_interacting(model, ensemble0, cfg, rng, track=())
    permuted = run_interacting(model, ensemble0.permuted(perm), cfg, rng, track=())
    return bool(np.array_equal(permuted.final.states, plain.final.states[perm]))
