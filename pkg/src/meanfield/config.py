"""Experiment configuration: sectioned key = value text (INI), strictly validated.

Every key must be known for its section, and model keys must apply to the
chosen model. ``ExperimentConfig.echo`` writes a canonical form that parses
back to an equal config; its hash tags every output file.
"""
from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import models as M
from .integrate import DEFAULT_INITIAL, InitialLaw, Scheme, StepConfig, default_scheme, scheme_from_str


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _int(text: str) -> int:
    return int(text)


def _float(text: str) -> float:
    return float(text)


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.replace(" ", "").split(",") if v]


def _str(text: str) -> str:
    return text.strip()


SCHEMA: dict[str, dict[str, Callable]] = {
    "model": {
        "name": _str,
        "phi_exponent": _int,
        "k": _int,
        "m": _int,
        "n": _int,
        "sigma": _float,
        "sigma_kind": _str,
        "sigma_c1": _float,
        "sigma_c2": _float,
        "sigma_c3": _float,
        "sigma_bound": _float,
        "n_modes": _int,
        "noise_decay": _float,
        "noise_scale": _float,
        "grid_factor": _float,
        "kappa": _float,
        "phi": _str,
    },
    "run": {
        "n_particles": _int,
        "dt": _float,
        "t_end": _float,
        "scheme": _str,
        "record_stride": _int,
        "seed": _int,
        "track": _int_list,
        "reference": _bool,
    },
    "init": {
        "kind": _str,
        "mean": _float,
        "std": _float,
        "m2": _float,
        "amplitude": _float,
        "decay": _float,
    },
    "sweep": {
        "n_values": _int_list,
        "replicas": _int,
        "n_ref": _int,
        "ref_seed": _int,
        "modes": _int_list,
        "directions": _int,
    },
    "probe": {
        "n_tuples": _int,
        "check": _str,
        "max_atoms": _int,
        "rtol": _float,
    },
}

_EUCLIDEAN_KEYS = {"sigma", "sigma_kind", "sigma_c1", "sigma_c2", "sigma_c3", "sigma_bound"}
_SPECTRAL_KEYS = {"n_modes", "noise_decay", "noise_scale", "grid_factor"}
MODEL_KEYS = {
    M.ModelName.VARIANCE_DRIFT: {"phi_exponent"} | _EUCLIDEAN_KEYS,
    M.ModelName.SVGD_POLYNOMIAL: {"k", "m", "n"} | _EUCLIDEAN_KEYS,
    M.ModelName.ALLEN_CAHN: _SPECTRAL_KEYS,
    M.ModelName.BURGERS_TRANSPORT: _SPECTRAL_KEYS | {"phi"},
    M.ModelName.MEAN_COUPLED_HEAT: _SPECTRAL_KEYS | {"kappa"},
}

PHI_CHOICES = {"tanh": (np.tanh, 1.0, 1.0), "sin": (np.sin, 1.0, 1.0)}


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ",".join(str(v) for v in value)
    return str(value)


@dataclass
class ExperimentConfig:
    sections: dict[str, dict] = field(default_factory=dict)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as err:
            raise ConfigError("syntax", str(err).splitlines()[0]) from None
        sections: dict[str, dict] = {}
        for name in parser.sections():
            if name not in SCHEMA:
                raise ConfigError(f"[{name}]", "unknown section")
            values = {}
            for key, raw in parser.items(name):
                if key not in SCHEMA[name]:
                    raise ConfigError(f"{name}.{key}", "unknown key")
                try:
                    values[key] = SCHEMA[name][key](raw)
                except ValueError as err:
                    raise ConfigError(f"{name}.{key}", f"cannot parse {raw!r} ({err})") from None
            sections[name] = values
        cfg = cls(sections)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_text(Path(path).read_text())

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def set(self, section: str, key: str, value) -> None:
        self.sections.setdefault(section, {})[key] = value

    # ------------------------------------------------------------ derived objects

    def model(self) -> M.ModelSpec:
        raw = self.sections.get("model", {})
        if "name" not in raw:
            raise ConfigError("model.name", "missing")
        try:
            name = M.model_name(raw["name"])
        except ValueError as err:
            raise ConfigError("model.name", str(err)) from None
        allowed = MODEL_KEYS[name] | {"name"}
        for key in raw:
            if key not in allowed:
                raise ConfigError(f"model.{key}", f"does not apply to model {name.value}")
        params = {k: v for k, v in raw.items() if k != "name" and not k.startswith("sigma") and k != "phi"}
        if name in (M.ModelName.VARIANCE_DRIFT, M.ModelName.SVGD_POLYNOMIAL):
            kind = raw.get("sigma_kind", "constant")
            if kind == "constant":
                for key in ("sigma_c1", "sigma_c2", "sigma_c3", "sigma_bound"):
                    if key in raw:
                        raise ConfigError(f"model.{key}", "only valid with sigma_kind = lipschitz")
                if "sigma" in raw:
                    params["sigma"] = raw["sigma"]
            elif kind == "lipschitz":
                if "sigma" in raw:
                    raise ConfigError("model.sigma", "use sigma_c1..c3 with sigma_kind = lipschitz")
                params["sigma"] = M.LipschitzSigma(
                    raw.get("sigma_c1", 1.0), raw.get("sigma_c2", 0.0), raw.get("sigma_c3", 0.0), raw.get("sigma_bound", 1.0)
                )
            else:
                raise ConfigError("model.sigma_kind", f"expected constant or lipschitz, got {kind!r}")
        if "phi" in raw:
            if raw["phi"] not in PHI_CHOICES:
                raise ConfigError("model.phi", f"expected one of {sorted(PHI_CHOICES)}")
            fn, sup, dsup = PHI_CHOICES[raw["phi"]]
            params.update(phi=fn, phi_sup=sup, dphi_sup=dsup)
        try:
            return M.make_model(name, **params)
        except (ValueError, TypeError) as err:
            raise ConfigError("model", str(err)) from None

    def step_config(self, threads: int = 1) -> StepConfig:
        model = self.model()
        for key in ("dt", "t_end"):
            if self.get("run", key) is None:
                raise ConfigError(f"run.{key}", "missing")
        scheme_text = self.get("run", "scheme")
        try:
            scheme = default_scheme(model) if scheme_text is None else scheme_from_str(scheme_text)
        except ValueError as err:
            raise ConfigError("run.scheme", str(err)) from None
        dt, t_end = self.get("run", "dt"), self.get("run", "t_end")
        if not dt > 0:
            raise ConfigError("run.dt", "must be positive")
        if dt > t_end:
            raise ConfigError("run.dt", f"dt={dt!r} exceeds t_end={t_end!r}")
        try:
            cfg = StepConfig(dt, t_end, scheme, self.get("run", "record_stride", 1), threads)
            cfg.validate_for(model)
        except ValueError as err:
            raise ConfigError("run.scheme" if "RK4" in str(err) or "semi" in str(err) else "run", str(err)) from None
        return cfg

    def initial_law(self) -> InitialLaw:
        model = self.model()
        raw = dict(self.sections.get("init", {}))
        if not raw:
            return DEFAULT_INITIAL[model.name]
        base = DEFAULT_INITIAL[model.name]
        kind = raw.pop("kind", base.kind)
        if kind not in ("gaussian", "scaled_m2", "mode"):
            raise ConfigError("init.kind", f"unknown initial law {kind!r}")
        return replace(base, kind=kind, **raw)

    @property
    def seed(self) -> int:
        return int(self.get("run", "seed", 0))

    @property
    def n_particles(self) -> int:
        return int(self.get("run", "n_particles", 64))

    def validate(self) -> None:
        if "model" in self.sections:
            self.model()
        if "run" in self.sections and "dt" in self.sections["run"] and "t_end" in self.sections["run"]:
            self.step_config()
        if self.get("run", "n_particles", 1) < 1:
            raise ConfigError("run.n_particles", "must be >= 1")
        if "init" in self.sections and "model" in self.sections:
            self.initial_law()

    # ------------------------------------------------------------ echo / hash

    def echo(self) -> str:
        lines = []
        for section in SCHEMA:
            if section not in self.sections:
                continue
            lines.append(f"[{section}]")
            for key in SCHEMA[section]:
                if key in self.sections[section]:
                    lines.append(f"{key} = {_format(self.sections[section][key])}")
            lines.append("")
        return "\n".join(lines)

    def config_hash(self) -> str:
        return hashlib.sha256(self.echo().encode()).hexdigest()[:16]
