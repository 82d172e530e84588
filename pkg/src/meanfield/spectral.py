"""Dirichlet sine basis on [0, 1]: transforms, projection, pseudo-spectral products, Q-Wiener noise.

All dense transforms use ``np.einsum`` rather than BLAS matmul: einsum gives
the same bits for a row whether it is evaluated alone or inside a batch,
which the exchangeability and thread-count reproducibility checks rely on.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .state import SpectralField, canonical_mean

SQRT2 = np.sqrt(2.0)


def basis_eval(k: int, x):
    if k < 1:
        raise ValueError("modes are 1-indexed")
    return SQRT2 * np.sin(k * np.pi * np.asarray(x, dtype=float))


def laplacian_eigenvalue(k: int) -> float:
    if k < 1:
        raise ValueError("modes are 1-indexed")
    return float((k * np.pi) ** 2)


def eigenvalues(n_modes: int) -> np.ndarray:
    return (np.arange(1, n_modes + 1) * np.pi) ** 2


def noise_spectrum(n_modes: int, decay: float) -> np.ndarray:
    """Eigenvalues q_k = k^(-2s) of the trace-class covariance Q."""
    if decay <= 0.5:
        raise ValueError("noise decay s must exceed 1/2 for Q to be trace class")
    return np.arange(1, n_modes + 1, dtype=float) ** (-2.0 * decay)


def project(u: SpectralField, n: int) -> SpectralField:
    """pi_n: zero every coefficient beyond mode n (length is kept)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    c = u.coeffs.copy()
    c[n:] = 0.0
    return SpectralField(c)


@dataclass(frozen=True)
class CollocationGrid:
    """Interior nodes x_j = j/(M+1), j = 1..M, paired with the first ``n_modes`` sine modes.

    The discrete sine transform on these nodes is exactly orthogonal, so
    grid sums reproduce integrals of trigonometric products whose total
    frequency stays below 2(M+1).
    """

    n_modes: int
    n_points: int

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("need at least one mode")
        if self.n_points < self.n_modes:
            raise ValueError("grid must have at least as many points as modes")

    @classmethod
    def for_modes(cls, n_modes: int, factor: float = 3.0) -> "CollocationGrid":
        return cls(n_modes, int(np.ceil(factor * n_modes)))

    @property
    def spacing(self) -> float:
        return 1.0 / (self.n_points + 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.arange(1, self.n_points + 1) * self.spacing

    @cached_property
    def _synthesis(self) -> np.ndarray:
        # (n_modes, n_points): e_k(x_j)
        k = np.arange(1, self.n_modes + 1)[:, None]
        return SQRT2 * np.sin(k * np.pi * self.nodes[None, :])

    @cached_property
    def _analysis(self) -> np.ndarray:
        return self.spacing * self._synthesis

    @cached_property
    def _dx_projection(self) -> np.ndarray:
        """(n_points, n_modes) map: grid values of w -> sine coefficients of d/dx w.

        w is first expanded in all M sine modes (exact DST-I interpolant); its
        derivative lives in the cosine basis, and <sqrt2 k pi cos(k pi x), e_j>
        equals 4jk/(j^2 - k^2) when j + k is odd and 0 otherwise.
        """
        m = self.n_points
        k_all = np.arange(1, m + 1)
        full = SQRT2 * np.sin(k_all[:, None] * np.pi * self.nodes[None, :]) * self.spacing  # (M modes, M pts)
        j = np.arange(1, self.n_modes + 1)[:, None]
        k = k_all[None, :]
        odd = (j + k) % 2 == 1
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(odd, 4.0 * j * k / (j * j - k * k), 0.0)  # (n_modes, M modes)
        return np.einsum("jk,ki->ij", d, full)

    def to_physical(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=float)
        n = coeffs.shape[-1]
        if n > self.n_modes:
            raise ValueError(f"field has {n} modes, grid supports {self.n_modes}")
        return np.einsum("...k,ki->...i", coeffs, self._synthesis[:n])

    def to_spectral(self, values: np.ndarray) -> np.ndarray:
        return np.einsum("...i,ki->...k", np.asarray(values, dtype=float), self._analysis)

    def dx_project(self, values: np.ndarray) -> np.ndarray:
        return np.einsum("...i,ij->...j", np.asarray(values, dtype=float), self._dx_projection)


def _check_dealiasing(grid: CollocationGrid, n_modes: int, op: str) -> None:
    if n_modes > grid.n_modes:
        raise ValueError(f"field has {n_modes} modes, grid supports {grid.n_modes}")
    need = 2 * n_modes if op == "cube_with_mean_square" else int(np.ceil(1.5 * n_modes))
    if grid.n_points < need:
        raise ValueError(f"dealiasing violated: {op} needs >= {need} points, grid has {grid.n_points}")


def mean_square_field(atoms: np.ndarray, grid: CollocationGrid) -> np.ndarray:
    """Pointwise (1/N) sum_j X_j(x)^2 on the grid nodes."""
    vals = grid.to_physical(np.atleast_2d(atoms))
    return canonical_mean(vals * vals)


def mean_phi_field(atoms: np.ndarray, grid: CollocationGrid, phi: Callable = np.tanh) -> np.ndarray:
    """Pointwise (1/N) sum_j phi(X_j(x)) on the grid nodes."""
    return canonical_mean(phi(grid.to_physical(np.atleast_2d(atoms))))


def cube_with_mean_square(u: np.ndarray, m2_field: np.ndarray, grid: CollocationGrid) -> np.ndarray:
    """Galerkin projection of m2(x) u(x), u given by coefficients (batched over leading axes)."""
    u = np.asarray(u, dtype=float)
    _check_dealiasing(grid, u.shape[-1], "cube_with_mean_square")
    return grid.to_spectral(grid.to_physical(u) * m2_field)[..., : u.shape[-1]]


def transport_phi(u: np.ndarray, phi_field: np.ndarray, grid: CollocationGrid) -> np.ndarray:
    """Galerkin projection of d/dx (u(x) phibar(x))."""
    u = np.asarray(u, dtype=float)
    _check_dealiasing(grid, u.shape[-1], "transport_phi")
    return grid.dx_project(grid.to_physical(u) * phi_field)[..., : u.shape[-1]]


def nonlinear_product(
    u: SpectralField,
    fields: list[SpectralField],
    pointwise_op: str,
    grid: CollocationGrid,
    phi: Callable = np.tanh,
) -> SpectralField:
    """Pseudo-spectral nonlinearity for ``u`` against the empirical measure of ``fields``.

    ``cube_with_mean_square`` gives pi_n[(1/N sum_j X_j^2) u];
    ``transport_phi`` gives pi_n[d/dx (u * 1/N sum_j phi(X_j))].
    An empty ``fields`` list means the measure is delta_u.
    """
    if pointwise_op not in ("cube_with_mean_square", "transport_phi"):
        raise ValueError(f"unknown pointwise op {pointwise_op!r}")
    _check_dealiasing(grid, u.n_modes, pointwise_op)
    atoms = np.array([f.coeffs for f in fields]) if fields else u.coeffs[None, :]
    if pointwise_op == "cube_with_mean_square":
        out = cube_with_mean_square(u.coeffs, mean_square_field(atoms, grid), grid)
    else:
        out = transport_phi(u.coeffs, mean_phi_field(atoms, grid, phi), grid)
    return SpectralField(out)


def qwiener_increment(rng: np.random.Generator, dt: float, n_modes: int, decay: float = 1.5, size=None) -> np.ndarray:
    """Increment (sqrt(q_k dt) xi_k)_k of a Q-Wiener process over a step dt."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    q = noise_spectrum(n_modes, decay)
    shape = (n_modes,) if size is None else tuple(np.atleast_1d(size)) + (n_modes,)
    if dt == 0:
        return np.zeros(shape)
    return np.sqrt(q * dt) * rng.standard_normal(shape)
