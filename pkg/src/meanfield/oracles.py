"""Reference solutions for the mean-field limits where moment closure is exact.

Nothing here imports the integrators: the ODE solver below is a separate,
scalar RK4 so the oracles stay independent of the code they check.
"""
from __future__ import annotations

import math

import numpy as np


def svgd_m2_analytic(m2_0: float, t: float) -> float:
    """Second moment for k = m = n = 1, sigma = 0: solves m' = -2 m (1 + m)."""
    if m2_0 < 0:
        raise ValueError("m2_0 must be non-negative")
    c = m2_0 / (1.0 + m2_0)
    e = c * math.exp(-2.0 * t)
    return e / (1.0 - e)


def _variance_rhs(m1: float, v: float) -> tuple[float, float]:
    return -v * m1, 2.0 * (1.0 - v * v)


def variance_model_moment_ode(m1_0: float, v_0: float, t_grid, dt: float = 1e-5) -> np.ndarray:
    """(mean, variance) of the Phi(u) = u^2/2, sigma = sqrt(2) mean-field law at each time in ``t_grid``.

    Gaussian initial data stay Gaussian (the drift is linear given the law),
    which closes the system m1' = -v m1, v' = 2 (1 - v^2). Integrated by RK4 at step ``dt``.
    """
    if v_0 < 0:
        raise ValueError("v_0 must be non-negative")
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if np.any(np.diff(t_grid) < 0) or (t_grid.size and t_grid[0] < 0):
        raise ValueError("t_grid must be non-negative and nondecreasing")
    out = np.empty((t_grid.size, 2))
    m1, v, t = float(m1_0), float(v_0), 0.0
    for i, target in enumerate(t_grid):
        while t < target - 1e-15:
            h = min(dt, target - t)
            a1, b1 = _variance_rhs(m1, v)
            a2, b2 = _variance_rhs(m1 + h / 2 * a1, v + h / 2 * b1)
            a3, b3 = _variance_rhs(m1 + h / 2 * a2, v + h / 2 * b2)
            a4, b4 = _variance_rhs(m1 + h * a3, v + h * b3)
            m1 += h / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
            v += h / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
            t += h
        out[i] = m1, v
    return out


def heat_mean_mode_analytic(a_k0: float, k: int, kappa: float, t: float) -> float:
    """Mean of mode k for the heat equation with -kappa E[X] coupling: a_k0 exp(-(lambda_k + kappa) t)."""
    if k < 1:
        raise ValueError("modes are 1-indexed")
    return a_k0 * math.exp(-((k * math.pi) ** 2 + kappa) * t)
