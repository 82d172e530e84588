import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meanfield import models as M
from meanfield.state import MeasureSnapshot, StateKind


def snap(values, kind=StateKind.EUCLIDEAN):
    x = np.asarray(values, dtype=float)
    return MeasureSnapshot(x[:, None] if x.ndim == 1 else x, kind)


def spec_snap(rows):
    return snap(np.atleast_2d(rows), StateKind.SPECTRAL_SINE)


VD = M.make_model("variance")
SVGD = M.make_model("svgd")


def test_model_names_and_aliases():
    assert M.model_name("AllenCahn") is M.ModelName.ALLEN_CAHN
    assert M.model_name("allencahn") is M.ModelName.ALLEN_CAHN
    assert M.model_name("heat") is M.ModelName.MEAN_COUPLED_HEAT
    with pytest.raises(ValueError, match="unknown model"):
        M.model_name("navier_stokes")


def test_param_validation():
    with pytest.raises(ValueError):
        M.make_model("variance", phi_exponent=0)
    with pytest.raises(ValueError):
        M.make_model("svgd", k=1.5)
    with pytest.raises(ValueError):
        M.make_model("allen_cahn", noise_decay=0.5)
    with pytest.raises(ValueError):
        M.make_model("svgd", sigma=-1.0)


def test_variance_drift_examples():
    assert M.eval_drift(VD, 0.0, [1.0], snap([-1.0, 1.0]))[0] == -1.0
    assert M.eval_drift(VD, 0.0, [7.3], snap([2.0]))[0] == 0.0


def test_svgd_drift_example():
    assert M.eval_drift(SVGD, 0.0, [1.0], snap([1.0, -1.0]))[0] == -2.0


def test_heat_drift_example():
    heat = M.make_model("heat", n_modes=1)
    out = M.eval_drift(heat, 0.0, [1.0], spec_snap([[1.0]]))
    assert out[0] == pytest.approx(-(math.pi**2 + 1), rel=1e-14)


def test_allen_cahn_single_mode_self_measure():
    ac = M.make_model("allen_cahn", n_modes=1)
    out = M.eval_drift(ac, 0.0, [1.0], spec_snap([[1.0]]))
    assert out[0] == pytest.approx(1 - math.pi**2 - 1.5, rel=1e-12)


def test_diffusion_examples():
    d = M.eval_diffusion(VD, 0.0, [0.4], snap([0.0, 1.0]))
    assert d.kind is M.NoiseKind.ADDITIVE_SCALAR and d.amplitude == math.sqrt(2)
    assert M.eval_diffusion(SVGD, 0.0, [0.4], snap([0.0])).kind is M.NoiseKind.NONE
    ac = M.make_model("allen_cahn", n_modes=4)
    d = M.eval_diffusion(ac, 0.0, np.zeros(4), spec_snap(np.zeros((1, 4))))
    assert d.kind is M.NoiseKind.ADDITIVE_QWIENER
    assert d.amplitude[1] == pytest.approx(0.35355339, rel=1e-8)


def test_lipschitz_sigma():
    sig = M.LipschitzSigma(c1=1.0, c2=0.5, c3=-0.25, bound=2.0)
    model = M.make_model("variance", sigma=sig)
    assert model.noise_kind is M.NoiseKind.LIPSCHITZ_SCALAR
    d = M.eval_diffusion(model, 0.0, [5.0], snap([1.0, 3.0]))
    assert d.amplitude == pytest.approx(1.0 + 0.5 * 2.0 - 0.25 * 2.0)
    assert sig.lipschitz_constant == 0.5


def test_errors_on_mismatch():
    ac = M.make_model("allen_cahn", n_modes=4)
    with pytest.raises(ValueError, match="dimension mismatch"):
        M.eval_drift(ac, 0.0, np.zeros(3), spec_snap(np.zeros((2, 4))))
    with pytest.raises(ValueError, match="expects Euclidean"):
        M.eval_drift(VD, 0.0, [1.0], spec_snap([[1.0]]))
    with pytest.raises(ValueError, match="mismatched"):
        M.probe_monotonicity(VD, [1.0], [0.0], snap([0.0]), spec_snap([[0.0]]), 0.0)


scalar = st.floats(-3, 3, allow_nan=False)
atoms = st.lists(scalar, min_size=1, max_size=8)


@settings(max_examples=400)
@given(scalar, atoms, st.integers(1, 3), st.integers(1, 3), st.integers(1, 3))
def test_sign_property_exact(u, mu, a, b, c):
    mu = snap(mu)
    vd = M.make_model("variance", phi_exponent=a)
    sv = M.make_model("svgd", k=a, m=b, n=c)
    assert M.probe_coercivity(vd, [u], mu).satisfied
    assert M.probe_coercivity(sv, [u], mu).satisfied
    assert M.probe_coercivity(vd, [u], mu).lhs <= 0.0
    assert M.probe_coercivity(sv, [u], mu).lhs <= 0.0


def test_sign_property_bulk():
    gen = np.random.default_rng(0)
    for _ in range(10_000):
        n = int(gen.integers(1, 4))
        u = gen.normal(size=1) * gen.uniform(0.1, 3)
        mu = snap(gen.normal(size=int(gen.integers(1, 7))) * gen.uniform(0.1, 3))
        for model in (M.make_model("variance", phi_exponent=n), M.make_model("svgd", k=n, m=n, n=n)):
            assert M.probe_coercivity(model, u, mu).lhs <= 0.0


@given(scalar, atoms, st.integers(1, 3), st.integers(1, 3), st.integers(1, 3))
def test_drift_odd_under_reflection(u, mu, a, b, c):
    for model in (M.make_model("variance", phi_exponent=a), M.make_model("svgd", k=a, m=b, n=c)):
        plus = M.eval_drift(model, 0.0, [u], snap(mu))
        minus = M.eval_drift(model, 0.0, [-u], snap([-x for x in mu]))
        assert np.array_equal(minus, -plus)


@pytest.mark.parametrize("name", [m.value for m in M.ModelName])
def test_eval_drift_pure(name):
    model = M.make_model(name)
    gen = np.random.default_rng(1)
    tup = M.random_probe_tuple(model, gen)
    a = M.eval_drift(model, 0.3, tup.u, tup.mu)
    b = M.eval_drift(model, 0.3, tup.u.copy(), MeasureSnapshot(tup.mu.states.copy(), tup.mu.kind))
    assert np.array_equal(a, b)


def test_coercivity_examples():
    r = M.probe_coercivity(VD, [3.0], snap([0.0, 2.0]))
    assert r.lhs == -9.0 and r.satisfied
    r = M.probe_coercivity(SVGD, [0.0], snap([1.0, 2.0]))
    assert r.lhs == 0.0 and r.satisfied
    ac = M.make_model("allen_cahn", n_modes=1)
    r = M.probe_coercivity(ac, [1.0], spec_snap([[1.0]]))
    assert r.lhs == pytest.approx(1 - math.pi**2 - 1.5)
    assert r.rhs == pytest.approx(1 - math.pi**2)
    assert r.satisfied


def test_monotonicity_examples():
    for name in M.ModelName:
        model = M.make_model(name)
        tup = M.random_probe_tuple(model, np.random.default_rng(2))
        r = M.probe_monotonicity(model, tup.u, tup.u, tup.mu, tup.mu, 0.0)
        assert r.lhs == 0.0 and r.satisfied
    r = M.probe_monotonicity(VD, [1.0], [0.0], snap([0.0]), snap([0.0]), 0.0)
    assert r.lhs == 0.0 and r.satisfied
    # u = v: the drift difference is -1 but the pairing with u - v = 0 vanishes
    r = M.probe_monotonicity(SVGD, [1.0], [1.0], snap([1.0]), snap([0.0]), 1.0)
    diff = M.eval_drift(SVGD, 0.0, [1.0], snap([1.0])) - M.eval_drift(SVGD, 0.0, [1.0], snap([0.0]))
    assert diff[0] == -1.0
    assert r.lhs == 0.0 and r.satisfied


@pytest.mark.parametrize("name", [m.value for m in M.ModelName])
def test_monotonicity_probe_with_frozen_constant(name):
    model = M.make_model(name)
    gen = np.random.default_rng(77)
    results = [
        M.probe_monotonicity(model, t.u, t.v, t.mu, t.nu, t.w2_sq)
        for t in (M.random_probe_tuple(model, gen) for _ in range(300))
    ]
    assert all(r.satisfied for r in results)


def test_burgers_constant_from_phi_bound():
    b = M.make_model("burgers", phi=np.sin, phi_sup=1.0)
    assert M.burgers_coercivity_constant(b) == 0.5
    assert M.burgers_coercivity_constant(M.make_model("burgers", phi_sup=2.0)) == 2.0


@pytest.mark.parametrize("name", ["allen_cahn", "burgers", "heat"])
def test_spectral_coercivity_random(name):
    model = M.make_model(name, n_modes=16)
    gen = np.random.default_rng(5)
    for _ in range(200):
        t = M.random_probe_tuple(model, gen)
        assert M.probe_coercivity(model, t.u, t.mu).satisfied
