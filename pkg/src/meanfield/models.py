"""Drift/diffusion pairs for the shipped mean-field models and probes of their structural inequalities.

Every model is evaluated in two stages: :func:`interaction` reduces the
empirical measure to the few quantities the drift needs (variance, moments,
a mean-square field, ...), then :func:`drift_batch` applies them to any number
of particle states. The split lets the integrator freeze the measure once per
step and evaluate particles in parallel.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Any, Callable

import numpy as np

from . import spectral
from .state import MeasureSnapshot, StateKind, canonical_mean, int_power


class ModelName(enum.Enum):
    VARIANCE_DRIFT = "VarianceDrift"
    SVGD_POLYNOMIAL = "SvgdPolynomial"
    ALLEN_CAHN = "AllenCahn"
    BURGERS_TRANSPORT = "BurgersTransport"
    MEAN_COUPLED_HEAT = "MeanCoupledHeat"


class NoiseKind(enum.Enum):
    NONE = "None"
    ADDITIVE_SCALAR = "AdditiveScalar"
    ADDITIVE_QWIENER = "AdditiveQWiener"
    LIPSCHITZ_SCALAR = "LipschitzScalar"


ALIASES = {
    "variance": ModelName.VARIANCE_DRIFT,
    "variance_drift": ModelName.VARIANCE_DRIFT,
    "svgd": ModelName.SVGD_POLYNOMIAL,
    "svgd_polynomial": ModelName.SVGD_POLYNOMIAL,
    "allen_cahn": ModelName.ALLEN_CAHN,
    "allen-cahn": ModelName.ALLEN_CAHN,
    "burgers": ModelName.BURGERS_TRANSPORT,
    "burgers_transport": ModelName.BURGERS_TRANSPORT,
    "heat": ModelName.MEAN_COUPLED_HEAT,
    "mean_coupled_heat": ModelName.MEAN_COUPLED_HEAT,
}


def model_name(text: str) -> ModelName:
    for m in ModelName:
        if text == m.value or text.lower() == m.value.lower():
            return m
    try:
        return ALIASES[text.lower()]
    except KeyError:
        raise ValueError(f"unknown model {text!r}; choose from {[m.value for m in ModelName]}") from None


@dataclass(frozen=True)
class LipschitzSigma:
    """sigma(u, mu) = c1 + c2 clip(u) + c3 clip(m[mu]), clip to [-bound, bound].

    Lipschitz in u and in mu (W2) with constant max(|c2|, |c3|).
    """

    c1: float = 1.0
    c2: float = 0.0
    c3: float = 0.0
    bound: float = 1.0

    def __call__(self, u: np.ndarray, mean: float) -> np.ndarray:
        b = self.bound
        return self.c1 + self.c2 * np.clip(u, -b, b) + self.c3 * np.clip(mean, -b, b)

    @property
    def lipschitz_constant(self) -> float:
        return max(abs(self.c2), abs(self.c3))


Sigma = float | LipschitzSigma


def _check_sigma(sigma: Sigma) -> None:
    if isinstance(sigma, LipschitzSigma):
        return
    if not np.isfinite(sigma) or sigma < 0:
        raise ValueError("constant sigma must be finite and >= 0")


@dataclass(frozen=True)
class VarianceDriftParams:
    phi_exponent: int = 1
    sigma: Sigma = float(np.sqrt(2.0))

    def __post_init__(self):
        if int(self.phi_exponent) != self.phi_exponent or self.phi_exponent < 1:
            raise ValueError("phi_exponent must be an integer >= 1")
        _check_sigma(self.sigma)


@dataclass(frozen=True)
class SvgdPolynomialParams:
    k: int = 1
    m: int = 1
    n: int = 1
    sigma: Sigma = 0.0

    def __post_init__(self):
        for name in ("k", "m", "n"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be an integer >= 1")
        _check_sigma(self.sigma)


@dataclass(frozen=True)
class _SpectralParams:
    n_modes: int = 32
    noise_decay: float = 1.5
    noise_scale: float = 1.0
    grid_factor: float = 3.0

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")
        if self.noise_decay <= 0.5:
            raise ValueError("noise_decay s must exceed 1/2 (trace-class Q)")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")
        if self.grid_factor < 2:
            raise ValueError("grid_factor below 2 violates cubic dealiasing")

    @property
    def grid(self) -> spectral.CollocationGrid:
        return spectral.CollocationGrid.for_modes(self.n_modes, self.grid_factor)


@dataclass(frozen=True)
class AllenCahnParams(_SpectralParams):
    pass


@dataclass(frozen=True)
class BurgersParams(_SpectralParams):
    phi: Callable = np.tanh
    phi_sup: float = 1.0
    dphi_sup: float = 1.0


@dataclass(frozen=True)
class MeanCoupledHeatParams(_SpectralParams):
    kappa: float = 1.0


PARAMS_TYPES = {
    ModelName.VARIANCE_DRIFT: VarianceDriftParams,
    ModelName.SVGD_POLYNOMIAL: SvgdPolynomialParams,
    ModelName.ALLEN_CAHN: AllenCahnParams,
    ModelName.BURGERS_TRANSPORT: BurgersParams,
    ModelName.MEAN_COUPLED_HEAT: MeanCoupledHeatParams,
}

# Monotonicity-probe constants: max over 1e5 random tuples of lhs / structural rhs,
# times 2 (scripts/calibrate_monotonicity.py, default parameters, seed 2024).
MONOTONICITY_C = {
    ModelName.VARIANCE_DRIFT: 1.01588,
    ModelName.SVGD_POLYNOMIAL: 0.869008,
    ModelName.ALLEN_CAHN: 0.0542536,
    ModelName.BURGERS_TRANSPORT: 0.00605042,
    ModelName.MEAN_COUPLED_HEAT: 0.0388575,
}


@dataclass(frozen=True)
class ModelSpec:
    name: ModelName
    params: Any

    def __post_init__(self):
        if not isinstance(self.params, PARAMS_TYPES[self.name]):
            raise TypeError(f"{self.name.value} expects {PARAMS_TYPES[self.name].__name__}")

    @property
    def state_kind(self) -> StateKind:
        if self.name in (ModelName.VARIANCE_DRIFT, ModelName.SVGD_POLYNOMIAL):
            return StateKind.EUCLIDEAN
        return StateKind.SPECTRAL_SINE

    @property
    def state_dim(self) -> int:
        return 1 if self.state_kind is StateKind.EUCLIDEAN else self.params.n_modes

    @property
    def noise_kind(self) -> NoiseKind:
        if self.state_kind is StateKind.SPECTRAL_SINE:
            return NoiseKind.NONE if self.params.noise_scale == 0 else NoiseKind.ADDITIVE_QWIENER
        sigma = self.params.sigma
        if isinstance(sigma, LipschitzSigma):
            return NoiseKind.LIPSCHITZ_SCALAR
        return NoiseKind.NONE if sigma == 0 else NoiseKind.ADDITIVE_SCALAR

    @property
    def monotonicity_c(self) -> float:
        return MONOTONICITY_C[self.name]

    def with_params(self, **changes) -> "ModelSpec":
        return ModelSpec(self.name, replace(self.params, **changes))


def make_model(name: str | ModelName, **params) -> ModelSpec:
    name = name if isinstance(name, ModelName) else model_name(name)
    return ModelSpec(name, PARAMS_TYPES[name](**params))


def stiff_diagonal(model: ModelSpec) -> np.ndarray | None:
    """The -lambda_k part of the drift that semi-implicit schemes treat implicitly."""
    if model.state_kind is StateKind.EUCLIDEAN:
        return None
    return spectral.eigenvalues(model.params.n_modes)


def _check_compatible(model: ModelSpec, states: np.ndarray, kind: StateKind) -> None:
    if kind is not model.state_kind:
        raise ValueError(f"{model.name.value} expects {model.state_kind.value} states, got {kind.value}")
    if states.shape[-1] != model.state_dim:
        raise ValueError(f"dimension mismatch: {model.name.value} expects dim {model.state_dim}, got {states.shape[-1]}")


def interaction(model: ModelSpec, mu: MeasureSnapshot) -> dict:
    """Reduce the empirical measure to what the drift and diffusion need."""
    _check_compatible(model, mu.states, mu.kind)
    p = model.params
    name = model.name
    out = {}
    if model.noise_kind is NoiseKind.LIPSCHITZ_SCALAR:
        out["mean"] = float(mu.mean()[0])
    if name is ModelName.VARIANCE_DRIFT:
        out["var"] = mu.variance()
    elif name is ModelName.SVGD_POLYNOMIAL:
        # mu(d/dy kappa(u, .)) + mu(kappa(u, .) grad Phi) = u^{2k-1} * coef
        coef = (2 * p.m - 1) * mu.signed_moment(2 * p.m - 2) + mu.signed_moment(2 * (p.m + p.n) - 2)
        out["coef"] = coef
    elif name is ModelName.ALLEN_CAHN:
        out["m2_field"] = spectral.mean_square_field(mu.states, p.grid)
    elif name is ModelName.BURGERS_TRANSPORT:
        out["phi_field"] = spectral.mean_phi_field(mu.states, p.grid, p.phi)
    elif name is ModelName.MEAN_COUPLED_HEAT:
        out["mode_mean"] = mu.mean()
    return out


def drift_batch(model: ModelSpec, t: float, states: np.ndarray, inter: dict) -> np.ndarray:
    """Drift A(t, u, mu) for each row u of ``states`` (N x dim)."""
    p = model.params
    name = model.name
    u = np.asarray(states, dtype=float)
    if name is ModelName.VARIANCE_DRIFT:
        return -int_power(u, 2 * p.phi_exponent - 1) * inter["var"]
    if name is ModelName.SVGD_POLYNOMIAL:
        return -int_power(u, 2 * p.k - 1) * inter["coef"]
    lam = spectral.eigenvalues(p.n_modes)
    if name is ModelName.ALLEN_CAHN:
        return (1.0 - lam) * u - spectral.cube_with_mean_square(u, inter["m2_field"], p.grid)
    if name is ModelName.BURGERS_TRANSPORT:
        return -lam * u + spectral.transport_phi(u, inter["phi_field"], p.grid)
    if name is ModelName.MEAN_COUPLED_HEAT:
        return -lam * u - p.kappa * inter["mode_mean"]
    raise AssertionError(name)


def eval_drift(model: ModelSpec, t: float, u, mu: MeasureSnapshot) -> np.ndarray:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    _check_compatible(model, u, mu.kind)
    return drift_batch(model, t, u[None, :], interaction(model, mu))[0]


@dataclass(frozen=True)
class Diffusion:
    """What the integrator needs to form B dW.

    ``amplitude`` is None (no noise), a scalar or per-particle array
    (scalar noise), or the per-mode vector sqrt(q_k) (Q-Wiener noise).
    """

    kind: NoiseKind
    amplitude: Any = None


def diffusion_batch(model: ModelSpec, t: float, states: np.ndarray, inter: dict) -> Diffusion:
    kind = model.noise_kind
    p = model.params
    if kind is NoiseKind.NONE:
        return Diffusion(kind)
    if kind is NoiseKind.ADDITIVE_SCALAR:
        return Diffusion(kind, float(p.sigma))
    if kind is NoiseKind.LIPSCHITZ_SCALAR:
        return Diffusion(kind, p.sigma(np.asarray(states, dtype=float), inter["mean"]))
    amp = p.noise_scale * np.sqrt(spectral.noise_spectrum(p.n_modes, p.noise_decay))
    return Diffusion(kind, amp)


def eval_diffusion(model: ModelSpec, t: float, u, mu: MeasureSnapshot) -> Diffusion:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    _check_compatible(model, u, mu.kind)
    d = diffusion_batch(model, t, u[None, :], interaction(model, mu))
    if d.kind is NoiseKind.LIPSCHITZ_SCALAR:
        return Diffusion(d.kind, float(np.ravel(d.amplitude)[0]))
    return d


# ---------------------------------------------------------------- probes


@dataclass(frozen=True)
class ProbeResult:
    lhs: float
    rhs: float
    satisfied: bool

    @property
    def margin(self) -> float:
        """rhs - lhs; negative means violated."""
        return self.rhs - self.lhs


def _sq(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x @ x)


def _v_sq(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sum(spectral.eigenvalues(x.size) * x * x))


def _within(lhs: float, rhs: float, rtol: float) -> bool:
    return lhs <= rhs + rtol * max(abs(lhs), abs(rhs))


def probe_coercivity(model: ModelSpec, u, mu: MeasureSnapshot, rtol: float | None = None) -> ProbeResult:
    """Check <A(u, mu), u> against the bound proved for the model.

    VarianceDrift, SvgdPolynomial: <= 0 (exact, no tolerance).
    AllenCahn: <= -||u||_1^2 + ||u||^2.
    BurgersTransport: <= -1/2 ||u||_1^2 + C ||u||^2, C = sup|phi|^2 / 2.
    MeanCoupledHeat: <= -||u||_1^2 + |kappa| ||u|| ||m[mu]||.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    pairing = float(eval_drift(model, 0.0, u, mu) @ u)
    name = model.name
    if name in (ModelName.VARIANCE_DRIFT, ModelName.SVGD_POLYNOMIAL):
        rhs = 0.0
        rtol = 0.0 if rtol is None else rtol
    else:
        rtol = 1e-8 if rtol is None else rtol
        if name is ModelName.ALLEN_CAHN:
            rhs = -_v_sq(u) + _sq(u)
        elif name is ModelName.BURGERS_TRANSPORT:
            rhs = -0.5 * _v_sq(u) + burgers_coercivity_constant(model) * _sq(u)
        else:
            rhs = -_v_sq(u) + abs(model.params.kappa) * np.sqrt(_sq(u)) * np.sqrt(_sq(mu.mean()))
    return ProbeResult(pairing, float(rhs), _within(pairing, float(rhs), rtol))


def burgers_coercivity_constant(model: ModelSpec) -> float:
    # |<u phibar, u_x>| <= sup|phi| ||u|| ||u||_1 <= 1/2 ||u||_1^2 + sup|phi|^2/2 ||u||^2
    return 0.5 * model.params.phi_sup**2


def monotonicity_structure(model: ModelSpec, u, v, mu: MeasureSnapshot, nu: MeasureSnapshot, w2_sq: float) -> float:
    """Right-hand side of the local monotonicity bound with the constant C removed."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    d2 = _sq(u - v)
    p = model.params
    name = model.name
    if name is ModelName.VARIANCE_DRIFT:
        deg = 2 * p.phi_exponent - 1
        return (mu.moment(2) + nu.moment(2)) * d2 + (1.0 + abs(u[0]) ** (2 * deg)) * w2_sq
    if name is ModelName.SVGD_POLYNOMIAL:
        q = 4 * (p.m + p.n) - 6
        mom = mu.moment(q) + nu.moment(q)
        if p.m >= 2:
            mom += mu.moment(4 * p.m - 6) + nu.moment(4 * p.m - 6)
        return (1.0 + mom) * d2 + (1.0 + abs(v[0]) ** (4 * p.k - 2)) * w2_sq
    if name is ModelName.ALLEN_CAHN:
        return (1.0 + mu.v_moment(2) + nu.v_moment(2)) * d2 + _v_sq(v) * w2_sq
    if name is ModelName.BURGERS_TRANSPORT:
        return d2 + _v_sq(v) * w2_sq
    if name is ModelName.MEAN_COUPLED_HEAT:
        return d2 + w2_sq
    raise AssertionError(name)


def probe_monotonicity(
    model: ModelSpec,
    u,
    v,
    mu: MeasureSnapshot,
    nu: MeasureSnapshot,
    w2_sq: float,
    c: float | None = None,
) -> ProbeResult:
    """<A(u,mu) - A(v,nu), u - v> against C * structure, C frozen per model."""
    if mu.kind is not nu.kind:
        raise ValueError("mismatched state kinds")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if u.shape != v.shape:
        raise ValueError("mismatched state dimensions")
    lhs = float((eval_drift(model, 0.0, u, mu) - eval_drift(model, 0.0, v, nu)) @ (u - v))
    c = model.monotonicity_c if c is None else c
    rhs = c * monotonicity_structure(model, u, v, mu, nu, w2_sq)
    return ProbeResult(lhs, rhs, lhs <= rhs)


# ---------------------------------------------------------------- random probe tuples


@dataclass(frozen=True)
class ProbeTuple:
    u: np.ndarray
    v: np.ndarray
    mu: MeasureSnapshot
    nu: MeasureSnapshot
    w2_sq: float


def _random_state(model: ModelSpec, gen: np.random.Generator, size: int, scale: float) -> np.ndarray:
    if model.state_kind is StateKind.EUCLIDEAN:
        return scale * gen.standard_normal((size, 1))
    k = np.arange(1, model.params.n_modes + 1, dtype=float)
    decay = gen.uniform(0.5, 2.0)
    return scale * k ** (-decay) * gen.standard_normal((size, model.params.n_modes))


def random_probe_tuple(model: ModelSpec, gen: np.random.Generator, max_atoms: int = 6) -> ProbeTuple:
    """(u, v, mu, nu, W2(mu, nu)^2) with log-uniform scales and exact small-N W2."""
    from .measure import w2_assignment

    n_atoms = int(gen.integers(1, max_atoms + 1))
    scales = np.exp(gen.uniform(np.log(0.05), np.log(3.0), size=4))
    u = _random_state(model, gen, 1, scales[0])[0]
    v = u + _random_state(model, gen, 1, scales[1])[0] if gen.random() < 0.5 else _random_state(model, gen, 1, scales[1])[0]
    a = _random_state(model, gen, n_atoms, scales[2])
    b = a + _random_state(model, gen, n_atoms, scales[3]) if gen.random() < 0.5 else _random_state(model, gen, n_atoms, scales[3])
    w2 = w2_assignment(a, b)
    kind = model.state_kind
    return ProbeTuple(u, v, MeasureSnapshot(a, kind), MeasureSnapshot(b, kind), w2 * w2)


def calibrate_monotonicity(model: ModelSpec, n_tuples: int, seed: int = 2024, safety: float = 2.0) -> float:
    """safety * max over random tuples of lhs / (structural rhs without C)."""
    gen = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_tuples):
        tup = random_probe_tuple(model, gen)
        lhs = float((eval_drift(model, 0.0, tup.u, tup.mu) - eval_drift(model, 0.0, tup.v, tup.nu)) @ (tup.u - tup.v))
        rhs = monotonicity_structure(model, tup.u, tup.v, tup.mu, tup.nu, tup.w2_sq)
        if lhs > 0:
            worst = max(worst, lhs / rhs if rhs > 0 else np.inf)
    return safety * worst
