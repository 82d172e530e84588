import math

import numpy as np
import pytest

from meanfield import models as M
from meanfield.integrate import (
    DEFAULT_INITIAL,
    BlowUpError,
    InitialLaw,
    Scheme,
    StepConfig,
    default_scheme,
    exchangeability_check,
    run_interacting,
    run_mean_field_reference,
    scheme_from_str,
    step_interacting,
)
from meanfield.oracles import svgd_m2_analytic
from meanfield.state import ParticleEnsemble, RngPlan, StateKind

EM, SEMI, RK4 = Scheme.EXPLICIT_EM, Scheme.SEMI_IMPLICIT_EM, Scheme.RK4


def spectral(rows):
    return ParticleEnsemble(np.atleast_2d(rows), StateKind.SPECTRAL_SINE)


def test_step_config_validation():
    with pytest.raises(ValueError, match="exceeds"):
        StepConfig(2.0, 1.0)
    with pytest.raises(ValueError):
        StepConfig(0.0, 1.0)
    with pytest.raises(ValueError, match="noise-free"):
        StepConfig(0.1, 1.0, RK4).validate_for(M.make_model("variance"))
    with pytest.raises(ValueError, match="stiff"):
        StepConfig(0.1, 1.0, SEMI).validate_for(M.make_model("svgd"))
    assert scheme_from_str("semi-implicit") is SEMI
    assert scheme_from_str("RK4") is RK4


def test_zero_drift_zero_noise_is_identity():
    ens = ParticleEnsemble(np.zeros((4, 1)))
    out = step_interacting(ens, M.make_model("svgd"), 0.0, StepConfig(0.1, 1.0), None)
    assert np.array_equal(out.states, ens.states)


def test_one_euler_step_by_hand():
    # Var{1, -1} = 1 so the drift is -u
    model = M.make_model("variance", sigma=0.0)
    out = step_interacting(ParticleEnsemble([1.0, -1.0]), model, 0.0, StepConfig(0.1, 1.0), None)
    assert out.states[:, 0].tolist() == pytest.approx([0.9, -0.9], rel=1e-15)


def test_semi_implicit_heat_step():
    model = M.make_model("heat", n_modes=1, kappa=0.0, noise_scale=0.0)
    out = step_interacting(spectral([[1.0]]), model, 0.0, StepConfig(0.1, 1.0, SEMI), RngPlan(0))
    assert out.states[0, 0] == pytest.approx(1 / (1 + math.pi**2 * 0.1), rel=1e-14)
    assert out.states[0, 0] == pytest.approx(0.5033, abs=1e-4)


@pytest.mark.parametrize("n", [1, 7, 100])
def test_svgd_second_moment_identity_any_n(n):
    model = M.make_model("svgd")
    ens = DEFAULT_INITIAL[model.name].sample(n, model, RngPlan(n))
    res = run_interacting(model, ens, StepConfig(1e-3, 1.0, RK4), None, track=())
    assert res.diagnostics["m2"][0] == pytest.approx(1.0, rel=1e-14)
    assert res.diagnostics["m2"][-1] == pytest.approx(svgd_m2_analytic(1.0, 1.0), rel=1e-5)


def test_single_particle_variance_model_is_brownian():
    model = M.make_model("variance")
    cfg = StepConfig(0.01, 0.5)
    rng = RngPlan(3)
    res = run_interacting(model, ParticleEnsemble([0.25]), cfg, rng)
    x = 0.25
    for step in range(cfg.n_steps):
        x = x + math.sqrt(2) * math.sqrt(cfg.dt) * rng.normals(step, 1, 1)[0, 0]
    assert res.final.states[0, 0] == pytest.approx(x, rel=1e-12)


def test_freezing_consistency_single_particle():
    model = M.make_model("heat", n_modes=4, kappa=0.0)
    cfg = StepConfig(1e-3, 1.0)
    rng = RngPlan(8)
    u = np.array([[0.3, -0.2, 0.1, 0.05]])
    out = step_interacting(spectral(u), model, 0.0, cfg, rng, step=5)
    lam = (np.arange(1, 5) * np.pi) ** 2
    amp = np.arange(1, 5, dtype=float) ** -1.5
    by_hand = u + (-lam * u) * cfg.dt + amp * math.sqrt(cfg.dt) * rng.normals(5, 1, 4)
    assert np.array_equal(out.states, by_hand)


def test_variance_model_mean_tracks_exp():
    model = M.make_model("variance")
    ens = InitialLaw("gaussian", mean=1.0, std=1.0).sample(4096, model, RngPlan(11))
    res = run_interacting(model, ens, StepConfig(1e-2, 1.0), RngPlan(11), track=())
    mean = res.diagnostics["mean0"]
    t = res.times
    se = np.sqrt(np.maximum(res.diagnostics["var0"], 1e-12) / 4096)
    assert np.all(np.abs(mean - np.exp(-t)) < 5 * se + 0.01)


def test_reference_equals_interacting_for_same_seed():
    model = M.make_model("variance")
    cfg = StepConfig(1e-2, 0.3)
    ref = run_mean_field_reference(model, 64, cfg, RngPlan(5))
    ens = DEFAULT_INITIAL[model.name].sample(64, model, RngPlan(5))
    plain = run_interacting(model, ens, cfg, RngPlan(5), track=())
    assert ref.reference and not plain.reference
    assert np.array_equal(ref.final.states, plain.final.states)


def test_svgd_reference_matches_analytic():
    model = M.make_model("svgd")
    ref = run_mean_field_reference(model, 5000, StepConfig(1e-3, 1.0, RK4), RngPlan(1))
    assert ref.diagnostics["m2"][-1] == pytest.approx(svgd_m2_analytic(1.0, 1.0), rel=1e-5)


def test_diagnostics_length_follows_stride():
    model = M.make_model("heat", n_modes=8)
    ens = DEFAULT_INITIAL[model.name].sample(6, model, RngPlan(0))
    res = run_interacting(model, ens, StepConfig(1e-3, 0.05, SEMI, record_stride=10), RngPlan(0), track=(0, 2))
    assert len(res.times) == 6
    assert res.times[-1] == pytest.approx(0.05)
    assert set(res.paths) == {0, 2}
    assert len(res.paths[0]) == 6
    assert np.all(np.diff(res.diagnostics["sup_m2"]) >= 0)
    assert np.all(np.diff(res.diagnostics["int_v2"]) >= 0)


def test_blow_up_reports_time():
    model = M.make_model("svgd", k=2)
    ens = ParticleEnsemble([30.0, -25.0, 1.0])
    with pytest.raises(BlowUpError, match="blow-up detected at t=") as err:
        run_interacting(model, ens, StepConfig(0.5, 5.0, EM), None)
    assert 0 < err.value.t <= 5.0
    assert "sup_m2" in err.value.diagnostics


def test_kind_mismatch_rejected():
    with pytest.raises(ValueError):
        run_interacting(M.make_model("heat", n_modes=3), ParticleEnsemble([1.0]), StepConfig(0.1, 1.0), RngPlan(0))


@pytest.mark.parametrize("name", [m.value for m in M.ModelName])
def test_exchangeability_identity_swap_reversal(name):
    model = M.make_model(name, **({"n_modes": 8} if name not in ("VarianceDrift", "SvgdPolynomial") else {}))
    cfg = StepConfig(1e-3, 0.02, default_scheme(model))
    ens = DEFAULT_INITIAL[model.name].sample(8, model, RngPlan(2))
    for perm in (np.arange(8), np.array([1, 0, 2, 3, 4, 5, 6, 7]), np.arange(8)[::-1]):
        assert exchangeability_check(model, ens, perm, cfg, seed=4)
    with pytest.raises(ValueError):
        exchangeability_check(model, ens, [0, 0, 1, 2, 3, 4, 5, 6], cfg, seed=4)


@pytest.mark.parametrize("name", ["variance", "allen_cahn", "burgers"])
def test_thread_count_does_not_change_bits(name):
    model = M.make_model(name, **({"n_modes": 16} if name != "variance" else {}))
    ens = DEFAULT_INITIAL[model.name].sample(64, model, RngPlan(9))
    runs = [
        run_interacting(model, ens, StepConfig(1e-3, 0.05, default_scheme(model), threads=k), RngPlan(9), track=(0, 5))
        for k in (1, 4)
    ]
    assert np.array_equal(runs[0].final.states, runs[1].final.states)
    for key in runs[0].diagnostics:
        assert np.array_equal(runs[0].diagnostics[key], runs[1].diagnostics[key])


def test_weak_first_order_bias_reduction():
    # one-mode heat with kappa = 0 is the OU process da = -pi^2 a dt + sqrt(2) dW
    model = M.make_model("heat", n_modes=1, kappa=0.0, noise_scale=math.sqrt(2))
    t_end = 0.2
    exact = math.exp(-math.pi**2 * t_end)
    ens = ParticleEnsemble(np.ones((100_000, 1)), StateKind.SPECTRAL_SINE)
    bias = []
    for dt in (0.02, 0.01):
        res = run_interacting(model, ens, StepConfig(dt, t_end, EM), RngPlan(21), track=())
        bias.append(abs(res.diagnostics["mean0"][-1] - exact))
    assert math.log2(bias[0] / bias[1]) >= 0.8


def test_lipschitz_noise_runs():
    model = M.make_model("variance", sigma=M.LipschitzSigma(1.0, 0.3, 0.2, 2.0))
    ens = DEFAULT_INITIAL[model.name].sample(32, model, RngPlan(0))
    res = run_interacting(model, ens, StepConfig(1e-2, 0.5), RngPlan(0))
    assert np.all(np.isfinite(res.final.states))
