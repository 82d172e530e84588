"""Particle ensembles, empirical snapshots, recorded paths and noise streams."""
from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np


class StateKind(enum.Enum):
    EUCLIDEAN = "Euclidean"
    SPECTRAL_SINE = "SpectralSine"


def tree_sum(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Pairwise (tree) sum along ``axis`` in a fixed order (zero-padded to a power of two)."""
    x = np.ascontiguousarray(np.moveaxis(np.asarray(values, dtype=float), axis, -1))
    n = x.shape[-1]
    if n == 0:
        return np.zeros(x.shape[:-1])
    size = 1 << (n - 1).bit_length()
    if size != n:
        x = np.concatenate([x, np.zeros(x.shape[:-1] + (size - n,))], axis=-1)
    while size > 1:
        size //= 2
        x = x[..., :size] + x[..., size:]
    return x[..., 0]


def int_power(x, p: int) -> np.ndarray:
    """x**p for a non-negative integer p by repeated squaring.

    libm pow may round (-x)**p and x**p differently; products do not, so the
    result is exactly even or odd in x.
    """
    if int(p) != p or p < 0:
        raise ValueError("integer power needs a non-negative integer exponent")
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    base, p = x, int(p)
    while p:
        if p & 1:
            out = out * base
        p >>= 1
        if p:
            base = base * base
    return out


def canonical_mean(values: np.ndarray) -> np.ndarray:
    """Mean along axis 0, invariant (bit-for-bit) under permutations of the rows.

    Positive and negative parts are sorted and tree-reduced separately, so the
    result depends only on the multiset of values, and negating every value
    negates the result exactly. NaN propagates.
    """
    x = np.asarray(values, dtype=float)
    if x.shape[0] == 0:
        raise ValueError("empty measure")
    # reduce along a contiguous last axis; "+ 0.0" turns -0.0 into +0.0 so
    # signed zeros cannot depend on sort order
    y = np.ascontiguousarray(np.moveaxis(x, 0, -1))
    parts = np.maximum(np.stack([y, -y]), 0.0)
    parts += 0.0
    s = tree_sum(np.sort(parts, axis=-1), axis=-1)
    return (s[0] - s[1]) / x.shape[0]


def h_norms(states: np.ndarray, kind: StateKind) -> np.ndarray:
    # orthonormal sine basis: Parseval makes the coefficient norm the L2 norm
    return np.sqrt(np.einsum("ij,ij->i", states, states))


def v_norms(states: np.ndarray, kind: StateKind) -> np.ndarray:
    if kind is StateKind.EUCLIDEAN:
        return h_norms(states, kind)
    k = np.arange(1, states.shape[1] + 1)
    lam = (k * np.pi) ** 2
    return np.sqrt(np.einsum("ij,j,ij->i", states, lam, states))


@dataclass(frozen=True)
class ParticleEnsemble:
    """N particle states stored row-major (one row per particle).

    ``stream_ids`` ties each particle to its noise stream; permuting an
    ensemble permutes the stream assignment with it.
    """

    states: np.ndarray
    kind: StateKind = StateKind.EUCLIDEAN
    stream_ids: np.ndarray | None = None

    def __post_init__(self):
        states = np.array(self.states, dtype=float, copy=True)
        if states.ndim == 1:
            states = states[:, None]
        if states.ndim != 2 or states.shape[0] < 1 or states.shape[1] < 1:
            raise ValueError(f"states must be a non-empty N x d array, got shape {states.shape}")
        if not np.all(np.isfinite(states)):
            raise ValueError("ensemble contains non-finite coefficients")
        states.flags.writeable = False
        object.__setattr__(self, "states", states)
        ids = np.arange(states.shape[0]) if self.stream_ids is None else np.asarray(self.stream_ids, dtype=np.int64)
        if ids.shape != (states.shape[0],):
            raise ValueError("stream_ids must have one entry per particle")
        ids = ids.copy()
        ids.flags.writeable = False
        object.__setattr__(self, "stream_ids", ids)

    @property
    def n_particles(self) -> int:
        return self.states.shape[0]

    @property
    def state_dim(self) -> int:
        return self.states.shape[1]

    def h_norms(self) -> np.ndarray:
        return h_norms(self.states, self.kind)

    def v_norms(self) -> np.ndarray:
        return v_norms(self.states, self.kind)

    def with_states(self, states: np.ndarray) -> "ParticleEnsemble":
        return ParticleEnsemble(states, self.kind, self.stream_ids)

    def permuted(self, perm) -> "ParticleEnsemble":
        perm = np.asarray(perm)
        return ParticleEnsemble(self.states[perm], self.kind, self.stream_ids[perm])


@dataclass(frozen=True)
class SpectralField:
    """Coefficients of a function in the Dirichlet sine basis sqrt(2) sin(k pi x) on [0, 1]."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float, copy=True).ravel()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def n_modes(self) -> int:
        return self.coeffs.size

    def h_norm(self) -> float:
        return float(np.sqrt(self.coeffs @ self.coeffs))

    def v_norm(self) -> float:
        k = np.arange(1, self.n_modes + 1)
        return float(np.sqrt(np.sum((k * np.pi) ** 2 * self.coeffs**2)))


class MeasureSnapshot:
    """Read-only view of the empirical measure (1/N) sum_j delta_{X_j}.

    All reductions go through :func:`canonical_mean`, so results are
    reproducible and identical for any relabelling of the particles.
    """

    def __init__(self, states: np.ndarray, kind: StateKind = StateKind.EUCLIDEAN):
        view = np.asarray(states, dtype=float)
        if view.ndim == 1:
            view = view[:, None]
        if view.shape[0] == 0:
            raise ValueError("empty measure")
        view = view.view()
        view.flags.writeable = False
        self.states = view
        self.kind = kind

    @property
    def n_atoms(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @cached_property
    def _h(self) -> np.ndarray:
        return h_norms(self.states, self.kind)

    def moment(self, p: float) -> float:
        """(1/N) sum_i ||x_i||_H^p."""
        return float(canonical_mean(self._h**p))

    def v_moment(self, p: float) -> float:
        return float(canonical_mean(v_norms(self.states, self.kind) ** p))

    def signed_moment(self, p: int) -> float:
        """(1/N) sum_i x_i^p for scalar atoms, p a non-negative integer."""
        if self.dim != 1:
            raise ValueError("signed moments need scalar atoms")
        return float(canonical_mean(int_power(self.states[:, 0], p)))

    @cached_property
    def _mean(self) -> np.ndarray:
        return canonical_mean(self.states)

    def mean(self) -> np.ndarray:
        return self._mean.copy()

    @cached_property
    def _variance(self) -> float:
        if self.dim != 1:
            raise ValueError("variance is defined for scalar atoms")
        return float(canonical_mean((self.states[:, 0] - self._mean[0]) ** 2))

    def variance(self) -> float:
        return self._variance


def empirical_snapshot(ensemble: ParticleEnsemble) -> MeasureSnapshot:
    return MeasureSnapshot(ensemble.states, ensemble.kind)


@dataclass(frozen=True)
class PathRecord:
    """Trajectory of one particle on a time grid, with the quantities entering tau_R."""

    times: np.ndarray
    states: np.ndarray
    h_norms: np.ndarray
    v_alpha_cumsum: np.ndarray
    alpha: float = 2.0
    kind: StateKind = StateKind.EUCLIDEAN

    @classmethod
    def from_states(cls, times, states, kind: StateKind = StateKind.EUCLIDEAN, alpha: float = 2.0) -> "PathRecord":
        times = np.asarray(times, dtype=float)
        states = np.asarray(states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if times.shape[0] != states.shape[0]:
            raise ValueError("times and states must have the same length")
        if times.size and np.any(np.diff(times) <= 0):
            raise ValueError("time grid must be increasing")
        if alpha <= 1:
            raise ValueError("alpha must exceed 1")
        h = h_norms(states, kind) if states.size else np.zeros(0)
        v = v_norms(states, kind) if states.size else np.zeros(0)
        cum = np.zeros_like(h)
        if h.size > 1:
            # left-endpoint rectangle rule
            cum[1:] = np.cumsum(v[:-1] ** alpha * np.diff(times))
        return cls(times, states, h, cum, float(alpha), kind)

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def t_end(self) -> float:
        return float(self.times[-1])


def tau_R(path: PathRecord, R: float) -> float:
    """First grid time where ||xi_t||_H + int_0^t ||xi_s||_V^alpha ds >= R, capped at T."""
    if len(path) == 0:
        raise ValueError("empty path")
    if R <= 0:
        raise ValueError("R must be positive")
    hit = np.nonzero(path.h_norms + path.v_alpha_cumsum >= R)[0]
    if hit.size == 0:
        return path.t_end
    return float(path.times[hit[0]])


@dataclass(frozen=True)
class RngPlan:
    """Counter-style noise streams.

    The normal draw for (step, mode, stream) is a pure function of
    ``(master_seed, purpose, step)`` and the position (mode, stream), so it does
    not depend on thread count or on which particle currently holds the stream.
    Modes are the slow index: the first n modes of a step are identical
    whatever the total number of modes drawn.
    """

    master_seed: int
    purpose: int = 0

    def generator(self, step: int) -> np.random.Generator:
        ss = np.random.SeedSequence([self.master_seed & 0xFFFFFFFFFFFFFFFF, self.purpose, step])
        return np.random.Generator(np.random.Philox(ss))

    def normals(self, step: int, n_streams: int, dim: int) -> np.ndarray:
        """Standard normals of shape (n_streams, dim); row s belongs to stream s."""
        return self.generator(step).standard_normal((dim, n_streams)).T

    def child(self, purpose: int) -> "RngPlan":
        return RngPlan(self.master_seed, purpose)


INIT_PURPOSE = 1
NOISE_PURPOSE = 0


def dump_ensemble(ensemble: ParticleEnsemble, path: str | Path | None = None) -> str:
    """CSV with one row per particle, preceded by a ``# kind=... dim=...`` header."""
    buf = io.StringIO()
    buf.write(f"# kind={ensemble.kind.value} dim={ensemble.state_dim}\n")
    for row in ensemble.states:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def load_ensemble(path: str | Path) -> ParticleEnsemble:
    kind = StateKind.EUCLIDEAN
    dim = None
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for token in line[1:].split():
                key, _, val = token.partition("=")
                if key == "kind":
                    kind = StateKind(val)
                elif key == "dim":
                    dim = int(val)
            continue
        rows.append([float(v) for v in line.split(",")])
    if not rows:
        raise ValueError(f"{path}: no samples")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: ragged rows")
    states = np.array(rows)
    if dim is not None and states.shape[1] != dim:
        raise ValueError(f"{path}: header dim={dim} but rows have {states.shape[1]} columns")
    return ParticleEnsemble(states, kind)
