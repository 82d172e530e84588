"""Check the moment-ODE oracle of the variance model against a brute-force mean-field run.

The reference system (10^5 particles by default) is integrated by Euler-Maruyama and its
mean and variance are compared with the ODE at a few times, in units of Monte Carlo error.

Usage: python scripts/validate_variance_oracle.py [n_ref]
"""
import math
import sys

import numpy as np

from meanfield import models as M
from meanfield.integrate import InitialLaw, StepConfig, run_mean_field_reference
from meanfield.oracles import variance_model_moment_ode
from meanfield.state import RngPlan

n_ref = int(sys.argv[1]) if len(sys.argv) > 1 else 100_000
for m1_0, v_0 in ((1.0, 1.0), (2.0, 0.25), (-0.5, 3.0)):
    model = M.make_model("variance")
    init = InitialLaw("gaussian", mean=m1_0, std=math.sqrt(v_0))
    res = run_mean_field_reference(model, n_ref, StepConfig(1e-3, 1.0, record_stride=250), RngPlan(2024), init)
    ode = variance_model_moment_ode(m1_0, v_0, res.times)
    print(f"m1(0)={m1_0} v(0)={v_0}")
    for t, m, v, (m_o, v_o) in zip(res.times, res.diagnostics["mean0"], res.diagnostics["var0"], ode):
        # Gaussian law: se(mean) = sqrt(v/N), se(var) = v sqrt(2/N)
        zm = (m - m_o) / math.sqrt(v_o / n_ref)
        zv = (v - v_o) / (v_o * math.sqrt(2 / n_ref))
        print(f"  t={t:4.2f}  mean {m:+.5f} vs {m_o:+.5f} (z={zm:+.2f})  var {v:.5f} vs {v_o:.5f} (z={zv:+.2f})")
    assert np.all(np.isfinite(ode))
