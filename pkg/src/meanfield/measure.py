"""Empirical-measure functionals and Wasserstein distances between sample sets."""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linear_sum_assignment

from .state import MeasureSnapshot, PathRecord, canonical_mean, tau_R


def _as_snapshot(mu) -> MeasureSnapshot:
    return mu if isinstance(mu, MeasureSnapshot) else MeasureSnapshot(np.asarray(mu, dtype=float))


def mean_of(mu):
    mu = _as_snapshot(mu)
    m = mu.mean()
    return float(m[0]) if mu.dim == 1 else m


def variance_of(mu) -> float:
    """Population variance (divide by N) of scalar atoms."""
    return _as_snapshot(mu).variance()


def _samples_2d(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return a[:, None] if a.ndim == 1 else a


def w2_sorted_1d(a, b, p: float = 2) -> float:
    """Exact W_p between two equal-size uniform empirical measures on the line (p in {1, 2})."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size != b.size:
        raise ValueError(f"sample sizes differ ({a.size} vs {b.size}); resampling required")
    if a.size == 0:
        raise ValueError("empty sample set")
    if p == 1:
        return float(canonical_mean(np.abs(a - b)))
    if p == 2:
        return math.sqrt(float(canonical_mean((a - b) ** 2)))
    raise ValueError("only p = 1 and p = 2 are supported")


def w2_assignment(a, b, max_n: int = 12) -> float:
    """Exact W2 between equal-size uniform empirical measures in R^d via optimal assignment.

    For spectral states the rows are sine coefficients, so the Euclidean cost
    is the squared H-norm of the difference.
    """
    a, b = _samples_2d(a), _samples_2d(b)
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"sample sizes differ ({a.shape[0]} vs {b.shape[0]}); resampling required")
    if a.shape[1] != b.shape[1]:
        raise ValueError("dimension mismatch")
    if a.shape[0] > max_n:
        raise ValueError(f"{a.shape[0]} samples exceeds max_n={max_n}; use sliced_w2 for large sets")
    cost = np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=-1)
    rows, cols = linear_sum_assignment(cost)
    return math.sqrt(float(np.sum(cost[rows, cols])) / a.shape[0])


def sliced_w2(a, b, n_directions: int, rng: np.random.Generator) -> tuple[float, float]:
    """Sliced W2: root-mean over random unit directions of the squared 1D W2 of projections.

    Returns (value, standard error from direction sampling). This is a
    distance-like diagnostic that never exceeds W2; it is not W2 itself.
    """
    a, b = _samples_2d(a), _samples_2d(b)
    if a.shape != b.shape:
        raise ValueError("sample sets must have equal size and dimension")
    if n_directions < 1:
        raise ValueError("need at least one direction")
    d = a.shape[1]
    theta = rng.standard_normal((n_directions, d))
    theta /= np.linalg.norm(theta, axis=1, keepdims=True)
    pa = np.sort(np.einsum("nd,kd->kn", a, theta), axis=1)
    pb = np.sort(np.einsum("nd,kd->kn", b, theta), axis=1)
    sq = np.mean((pa - pb) ** 2, axis=1)
    value = math.sqrt(float(np.mean(sq)))
    if n_directions < 2 or value == 0.0:
        return value, 0.0
    se_sq = float(np.std(sq, ddof=1)) / math.sqrt(n_directions)
    return value, se_sq / (2.0 * value)


def stopped_sup_distance(pa: PathRecord, pb: PathRecord, R: float) -> float:
    """sup over grid times t <= tau_R(pa) ^ tau_R(pb) of ||pa_t - pb_t||_H."""
    if pa.times.shape != pb.times.shape or not np.array_equal(pa.times, pb.times):
        raise ValueError("paths are on different time grids")
    if pa.alpha != pb.alpha:
        raise ValueError("paths use different alpha")
    tau = min(tau_R(pa, R), tau_R(pb, R))
    upto = pa.times <= tau
    diff = pa.states[upto] - pb.states[upto]
    return float(np.sqrt(np.max(np.einsum("ij,ij->i", diff, diff))))


def bootstrap_resample(samples, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``size`` rows with replacement (caller-side fix for unequal sample sizes)."""
    samples = np.asarray(samples)
    return samples[rng.integers(0, samples.shape[0], size=size)]
