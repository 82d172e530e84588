"""Interacting particle and field systems with polynomial-growth kernels and their mean-field limits."""
from .state import (
    MeasureSnapshot,
    ParticleEnsemble,
    PathRecord,
    RngPlan,
    SpectralField,
    StateKind,
    empirical_snapshot,
    tau_R,
)
from .models import ModelName, ModelSpec, NoiseKind, make_model
from .integrate import InitialLaw, RunResult, Scheme, StepConfig, run_interacting, run_mean_field_reference

__version__ = "0.1.0"
