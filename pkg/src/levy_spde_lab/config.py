"""JSON experiment configuration: strict parsing into model and run objects.

A config has three blocks, ``model``, ``run`` and ``experiment``. Unknown keys
are rejected at every level so that typos fail loudly.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

from .integrator import GaussianLaw, ModelSpec, PointMass
from .noise import BoundedDiffusion, ConstantDiffusion, DiagonalJumpCoefficient, JumpSpec, power_profile
from .spectral import AffineReaction, BoundedReaction, CubicReaction, ZeroReaction

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "build_model", "build_law", "EXPERIMENTS"]


class ConfigError(ValueError):
    pass


EXPERIMENTS = ("contraction", "concentration", "certificates", "galerkin", "moments", "rates")

_EXPERIMENT_DEFAULTS = {
    "contraction": {
        "observation_times": [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5],
        "check_times": [0.1, 0.25, 0.5],
        "rate_slack": 0.25,
        "n_boot": 1000,
    },
    "concentration": {
        "observables": [{"type": "linear", "direction": [1.0]}, {"type": "distance", "anchor": [0.0]}],
        "r_grid": "auto",
        "r_points": 20,
        "bound_window": [1e-3, 0.5],
    },
    "certificates": {
        "observables": [{"type": "linear", "direction": [1.0]}, {"type": "distance", "anchor": [0.0]}],
        "lambda_grid": [0.5, 1.0, 2.0],
        "r_grid": "auto",
        "r_points": 12,
        "block_sizes": [1, 4],
        "burn_in_factor": 5.0,
        "spacing_factor": 3.0,
        "n_samples": 2000,
        "chains": 1,
        "min_samples": 100,
        "bound_window": [1e-3, 0.5],
        "n_boot": 1000,
    },
    "galerkin": {"modes": [4, 8, 16, 32], "finest_ratio": 0.1, "n_boot": 1000, "label": ""},
    "moments": {"modes": [8, 16, 32], "stability_factor": 1.5, "n_boot": 1000},
    "rates": {
        "r_grid": [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0],
        "lambda_grid": [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
    },
}

_RUN_DEFAULTS = {"T": 0.5, "dt": 1e-3, "m": 100, "seed": 0, "stride": 1, "x0": None, "y0": None}


def _strict(block, allowed, where):
    if not isinstance(block, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(block) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _profile(spec, n, decay=0.0, modes=None):
    """Scalar -> amplitude * k^(-decay) on the first ``modes`` modes; list -> zero padded."""
    if isinstance(spec, (list, tuple)):
        out = np.zeros(n)
        vals = np.asarray(spec, dtype=float)[:n]
        out[: vals.size] = vals
        return out
    out = power_profile(n, float(spec), decay)
    if modes is not None:
        out[int(modes) :] = 0.0
    return out


def _build_reaction(block, n):
    if block is None:
        return ZeroReaction()
    kind = block.get("type")
    if kind == "zero":
        _strict(block, {"type"}, "model.reaction")
        return ZeroReaction()
    if kind == "affine":
        _strict(block, {"type", "slope", "offset"}, "model.reaction")
        return AffineReaction(_profile(block.get("slope", 0.0), n), _profile(block.get("offset", 0.0), n))
    if kind == "bounded":
        _strict(block, {"type", "amplitude", "scale"}, "model.reaction")
        return BoundedReaction(float(block["amplitude"]), float(block.get("scale", 1.0)))
    if kind == "cubic":
        _strict(block, {"type", "c1"}, "model.reaction")
        return CubicReaction(float(block.get("c1", 0.0)))
    raise ConfigError(f"unknown reaction type {kind!r}")


def _build_diffusion(block, n):
    if block is None:
        return ConstantDiffusion(np.zeros(n))
    kind = block.get("type")
    common = {"type", "amplitude", "decay", "modes", "scales"}
    if "scales" in block:
        scales = _profile(block["scales"], n)
    else:
        scales = _profile(float(block.get("amplitude", 0.0)), n, float(block.get("decay", 0.0)), block.get("modes"))
    if kind == "constant":
        _strict(block, common, "model.diffusion")
        return ConstantDiffusion(scales)
    if kind == "bounded":
        _strict(block, common | {"base", "modulation"}, "model.diffusion")
        return BoundedDiffusion(scales, float(block.get("base", 1.0)), float(block.get("modulation", 0.0)))
    raise ConfigError(f"unknown diffusion type {kind!r}")


def _build_jumps(block, n):
    if block is None:
        return None
    _strict(block, {"marks", "coefficient"}, "model.jumps")
    coef = block.get("coefficient", {})
    _strict(coef, {"offset", "modulation", "decay", "modes"}, "model.jumps.coefficient")
    decay = float(coef.get("decay", 0.0))
    modes = coef.get("modes")
    g = DiagonalJumpCoefficient(
        _profile(coef.get("offset", 0.0), n, decay, modes),
        _profile(coef.get("modulation", 0.0), n, decay, modes),
    )
    marks = block["marks"]
    kind = marks.get("type")
    if kind == "discrete":
        _strict(marks, {"type", "values", "weights"}, "model.jumps.marks")
        return JumpSpec.discrete(marks["values"], marks["weights"], g)
    if kind == "uniform":
        _strict(marks, {"type", "low", "high", "rate", "nodes"}, "model.jumps.marks")
        return JumpSpec.uniform(
            float(marks["low"]), float(marks["high"]), float(marks["rate"]), g, int(marks.get("nodes", 64))
        )
    raise ConfigError(f"unknown mark space type {kind!r}")


def build_model(block: dict) -> ModelSpec:
    _strict(block, {"n_modes", "reaction", "diffusion", "jumps", "constants"}, "model")
    if "n_modes" not in block:
        raise ConfigError("model.n_modes is required")
    n = int(block["n_modes"])
    try:
        return ModelSpec(
            n,
            _build_reaction(block.get("reaction"), n),
            _build_diffusion(block.get("diffusion"), n),
            _build_jumps(block.get("jumps"), n),
            dict(block.get("constants", {})),
        )
    except (ValueError, KeyError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid model block: {exc}") from exc


def build_law(block, n):
    """Initial law from a config block; ``None`` means the zero field."""
    if block is None:
        return PointMass(np.zeros(n))
    kind = block.get("type", "point")
    if kind == "point":
        _strict(block, {"type", "coeffs", "amplitude", "decay", "modes"}, "initial law")
        if "coeffs" in block:
            return PointMass(_profile(block["coeffs"], n))
        return PointMass(
            _profile(float(block.get("amplitude", 0.0)), n, float(block.get("decay", 0.0)), block.get("modes"))
        )
    if kind == "gaussian":
        _strict(block, {"type", "mean", "variances", "variance", "decay", "modes"}, "initial law")
        mean = build_law(block.get("mean"), n).coeffs
        if "variances" in block:
            var = _profile(block["variances"], n)
        else:
            var = _profile(float(block.get("variance", 0.0)), n, float(block.get("decay", 0.0)), block.get("modes"))
        return GaussianLaw(mean, var)
    raise ConfigError(f"unknown initial law type {kind!r}")


@dataclass
class ExperimentConfig:
    experiment: str
    model: ModelSpec
    run: dict
    params: dict
    raw: dict

    @property
    def seed(self) -> int:
        return int(self.run["seed"])

    def echo(self) -> dict:
        """The resolved config, enough to reproduce the run."""
        return copy.deepcopy(self.raw)


def parse_config(raw: dict, experiment: str | None = None, seed: int | None = None) -> ExperimentConfig:
    raw = copy.deepcopy(raw)
    _strict(raw, {"model", "run", "experiment"}, "config")
    exp_block = dict(raw.get("experiment", {}))
    name = experiment or exp_block.get("name")
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; expected one of {EXPERIMENTS}")
    if exp_block.get("name", name) != name:
        raise ConfigError(f"config is for experiment {exp_block['name']!r}, not {name!r}")
    exp_block["name"] = name
    params = copy.deepcopy(_EXPERIMENT_DEFAULTS[name])
    _strict(exp_block, set(params) | {"name"}, "experiment")
    params.update({k: v for k, v in exp_block.items() if k != "name"})

    run = dict(_RUN_DEFAULTS)
    run_block = raw.get("run", {})
    _strict(run_block, set(_RUN_DEFAULTS), "run")
    run.update(run_block)
    if seed is not None:
        run["seed"] = int(seed)
    if not run["dt"] > 0:
        raise ConfigError("run.dt must be positive")
    if not run["T"] > 0:
        raise ConfigError("run.T must be positive")
    if int(run["m"]) < 1:
        raise ConfigError("run.m must be >= 1")
    if name in ("contraction", "concentration", "moments", "galerkin") and int(run["m"]) < 2:
        raise ConfigError("statistical experiments need run.m >= 2")
    if name == "contraction" and max(params["observation_times"]) > run["T"] + 1e-12:
        raise ConfigError("observation times exceed run.T")

    model = build_model(raw.get("model", {}))
    raw["run"] = run
    raw["experiment"] = exp_block
    return ExperimentConfig(name, model, run, params, raw)


def load_config(path, experiment: str | None = None, seed: int | None = None) -> ExperimentConfig:
    with open(FsPath(path)) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return parse_config(raw, experiment, seed)
