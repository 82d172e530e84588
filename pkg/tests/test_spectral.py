import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import trapezoid

from meanfield.spectral import (
    CollocationGrid,
    basis_eval,
    eigenvalues,
    laplacian_eigenvalue,
    nonlinear_product,
    noise_spectrum,
    project,
    qwiener_increment,
)
from meanfield.state import SpectralField


def test_basis_values():
    assert basis_eval(1, 0.5) == pytest.approx(math.sqrt(2))
    assert basis_eval(2, 0.5) == pytest.approx(0.0, abs=1e-15)
    assert abs(basis_eval(1, 1e-9)) < 1e-8


def test_modes_are_one_indexed():
    with pytest.raises(ValueError, match="modes are 1-indexed"):
        basis_eval(0, 0.3)
    with pytest.raises(ValueError):
        laplacian_eigenvalue(0)


def test_eigenvalues():
    assert laplacian_eigenvalue(1) == pytest.approx(9.8696044, rel=1e-8)
    assert laplacian_eigenvalue(2) == pytest.approx(4 * math.pi**2)
    assert np.all(np.diff(eigenvalues(20)) > 0)


def test_projection_examples():
    u = SpectralField([1.0, 1.0, 1.0])
    p = project(u, 2)
    assert p.coeffs[:2].tolist() == [1.0, 1.0] and p.coeffs[2] == 0.0
    assert p.h_norm() ** 2 == pytest.approx(2.0)
    assert np.all(project(u, 0).coeffs == 0)
    assert np.array_equal(project(u, 10).coeffs, u.coeffs)


@given(arrays(float, st.integers(1, 20), elements=st.floats(-10, 10)), st.integers(0, 25))
def test_projection_idempotent_and_contractive(c, n):
    u = SpectralField(c)
    p = project(u, n)
    assert np.array_equal(project(p, n).coeffs, p.coeffs)
    assert p.h_norm() <= u.h_norm()
    assert p.v_norm() <= u.v_norm()


def test_grid_gram_matrix_is_identity():
    grid = CollocationGrid.for_modes(8)
    basis = np.array([basis_eval(k, grid.nodes) for k in range(1, 9)])
    gram = basis @ basis.T * grid.spacing
    np.testing.assert_allclose(gram, np.eye(8), atol=1e-8)


@settings(max_examples=50, deadline=None)
@given(arrays(float, st.integers(1, 48), elements=st.floats(-3, 3)))
def test_transform_roundtrip(c):
    grid = CollocationGrid.for_modes(c.size)
    back = grid.to_spectral(grid.to_physical(c))[: c.size]
    np.testing.assert_allclose(back, c, rtol=1e-10, atol=1e-10)


def test_to_physical_matches_basis_sum():
    grid = CollocationGrid.for_modes(5)
    c = np.array([0.3, -1.0, 0.0, 2.0, 0.5])
    direct = sum(c[k - 1] * basis_eval(k, grid.nodes) for k in range(1, 6))
    np.testing.assert_allclose(grid.to_physical(c), direct, atol=1e-13)


@pytest.mark.parametrize("k", [1, 3])
def test_second_difference_reproduces_laplacian(k):
    x = np.linspace(0.1, 0.9, 17)
    errors = []
    for h in (1e-2, 5e-3):
        fd = (basis_eval(k, x + h) - 2 * basis_eval(k, x) + basis_eval(k, x - h)) / h**2
        errors.append(np.max(np.abs(fd + laplacian_eigenvalue(k) * basis_eval(k, x))))
    assert math.log2(errors[0] / errors[1]) >= 1.9


def test_cube_single_mode():
    grid = CollocationGrid.for_modes(4)
    u = SpectralField([1.0, 0.0, 0.0, 0.0])
    out = nonlinear_product(u, [], "cube_with_mean_square", grid)
    assert out.coeffs[0] == pytest.approx(1.5, rel=1e-12)
    # int e1^3 e3 = -1/2: the cube also excites mode 3
    assert out.coeffs[2] == pytest.approx(-0.5, rel=1e-12)


@pytest.mark.parametrize("op", ["cube_with_mean_square", "transport_phi"])
def test_zero_field_gives_zero(op):
    grid = CollocationGrid.for_modes(6)
    u = SpectralField(np.zeros(6))
    assert np.all(nonlinear_product(u, [u], op, grid).coeffs == 0)


def test_transport_constant_phi_kills_mode_one():
    grid = CollocationGrid.for_modes(8)
    u = SpectralField(np.eye(8)[0])
    out = nonlinear_product(u, [u], "transport_phi", grid, phi=lambda x: np.full_like(x, 0.7))
    assert abs(out.coeffs[0]) < 1e-12
    # <d/dx e_1, e_j> = 4j / (j^2 - 1) for even j, 0 for odd j
    assert out.coeffs[1] == pytest.approx(0.7 * 8 / 3, rel=1e-12)
    np.testing.assert_allclose(out.coeffs[2::2], 0.0, atol=1e-12)


def test_derivative_projection_matches_quadrature():
    grid = CollocationGrid.for_modes(6)
    fine = np.linspace(0, 1, 200001)
    for k in (1, 2, 3):
        for j in (1, 2, 4):
            f = basis_eval(k, grid.nodes)
            # <d/dx e_k, e_j>
            integrand = math.sqrt(2) * k * math.pi * np.cos(k * math.pi * fine) * basis_eval(j, fine)
            exact = trapezoid(integrand, fine)
            assert grid.dx_project(f)[j - 1] == pytest.approx(exact, abs=1e-8)


def test_dealiasing_violation():
    grid = CollocationGrid(n_modes=8, n_points=12)
    u = SpectralField(np.ones(8))
    with pytest.raises(ValueError, match="dealiasing violated"):
        nonlinear_product(u, [u], "cube_with_mean_square", grid)
    nonlinear_product(u, [u], "transport_phi", grid)


def test_cube_sign_for_mode_one_dominated_fields():
    gen = np.random.default_rng(11)
    grid = CollocationGrid.for_modes(6)
    for _ in range(100):
        c = gen.normal(size=6)
        c[0] = 10 * np.sum(np.abs(c[1:])) * gen.uniform(1.0, 3.0) * np.sign(gen.normal())
        u = SpectralField(c)
        out = nonlinear_product(u, [u], "cube_with_mean_square", grid)
        # positive field -> positive cube -> nonnegative mode-1 coefficient (and mirrored for negative)
        assert out.coeffs[0] * np.sign(c[0]) >= 0


def test_noise_spectrum():
    q = noise_spectrum(4, 1.5)
    assert math.sqrt(q[1]) == pytest.approx(2**-1.5)
    with pytest.raises(ValueError):
        noise_spectrum(4, 0.5)


def test_qwiener_statistics():
    gen = np.random.default_rng(5)
    dt = 1e-2
    draws = qwiener_increment(gen, dt, 3, 1.5, size=1_000_000)
    q = noise_spectrum(3, 1.5)
    for k in range(3):
        assert abs(draws[:, k].mean()) < 4 * math.sqrt(q[k] * dt / 1e6)
    assert draws[:, 0].var() == pytest.approx(q[0] * dt, rel=0.02)


def test_qwiener_zero_dt():
    assert np.all(qwiener_increment(np.random.default_rng(0), 0.0, 5) == 0)
