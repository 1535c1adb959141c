"""Experiment configuration: schema, resolution, and built-in presets.

A configuration is a plain nested mapping (parsed from TOML or JSON) with
sections ``scenario``, ``delay``, ``algorithm``, and optionally ``sweep`` and
``output``. ``resolve`` turns a document into live objects, replacing every
"auto" marker (step parameter, contraction shift, quantizer range) with its
computed value so runs are self-describing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .compression import GaussianNoise, IdentityCompression, UniformQuantizer
from .costs import CostScenario, DriftSpec, ScenarioSpec, build_scenario
from .engine import EngineParams, MODE_LOCAL, MODE_ZERO_LOCAL
from .errors import ConfigError
from .network import DelayConfig


def load_config(path: str) -> dict:
    """Parse a TOML (default) or JSON configuration file."""
    try:
        text = open(path, "rb").read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if str(path).endswith(".json"):
        try:
            return json.loads(text.decode())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    try:
        import tomllib  # py >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        return tomllib.loads(text.decode())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc


def _section(doc: dict, name: str) -> dict:
    got = doc.get(name)
    if not isinstance(got, dict):
        raise ConfigError(f"missing or malformed [{name}] section")
    return got


def _field(section: dict, section_name: str, key: str, default=None, required=False):
    if key in section:
        return section[key]
    if required:
        raise ConfigError(f"[{section_name}] is missing required field {key!r}")
    return default


def scenario_spec_from_doc(doc: dict) -> ScenarioSpec:
    sc = _section(doc, "scenario")
    workers = int(_field(sc, "scenario", "workers", required=True))
    if "block_dims" in sc:
        dims = tuple(int(d) for d in sc["block_dims"])
    else:
        dims = tuple([int(_field(sc, "scenario", "block_dim", required=True))] * workers)
    drift_doc = sc.get("drift", {})
    feas_doc = sc.get("feasible", {})
    try:
        return ScenarioSpec(
            workers=workers,
            block_dims=dims,
            target_dim=int(_field(sc, "scenario", "target_dim", required=True)),
            horizon=int(_field(sc, "scenario", "horizon", required=True)),
            mu=float(_field(sc, "scenario", "mu", required=True)),
            drift=DriftSpec(
                kind=drift_doc.get("kind", "static"),
                sigma=float(drift_doc.get("sigma", 0.0)),
                rho=float(drift_doc.get("rho", 0.0)),
            ),
            a_max=float(sc.get("a_max", 1.0)),
            b_scale=float(sc.get("b_scale", 1.0)),
            seed=int(sc.get("seed", 0)),
            feasible_kind=feas_doc.get("kind", "box"),
            feasible_size=float(feas_doc.get("size", 5.0)),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid [scenario] section: {exc}") from exc


def delay_from_doc(doc: dict) -> DelayConfig:
    d = _section(doc, "delay")
    try:
        return DelayConfig(
            tau_u=int(d.get("tau_u", 1)),
            tau_d=int(d.get("tau_d", 0)),
            tau_l=int(d.get("tau_l", 0)),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid [delay] section: {exc}") from exc


def compression_from_doc(comp_doc: dict, scenario: CostScenario):
    scheme = comp_doc.get("scheme", "identity")
    if scheme == "identity":
        return IdentityCompression()
    if scheme == "quantize":
        bits = int(comp_doc.get("bits", 8))
        rng = comp_doc.get("range", "auto")
        if rng == "auto":
            peak = float(np.ceil(scenario.data_abs_max()))
            lo, hi = -peak, peak
        else:
            lo, hi = float(rng[0]), float(rng[1])
        try:
            return UniformQuantizer(bits=bits, lo=lo, hi=hi)
        except ValueError as exc:
            raise ConfigError(f"invalid quantizer: {exc}") from exc
    if scheme == "noise":
        try:
            return GaussianNoise(std=float(comp_doc.get("std", 0.0)), seed=int(comp_doc.get("seed", 0)))
        except ValueError as exc:
            raise ConfigError(f"invalid noise scheme: {exc}") from exc
    raise ConfigError(f"unknown compression scheme {scheme!r}")


@dataclass
class ResolvedExperiment:
    """A fully resolved run: live objects plus the resolved constants."""

    scenario: CostScenario
    params: EngineParams
    delay: DelayConfig
    gamma: float
    mode: str
    doc: dict

    @property
    def resolved(self) -> dict:
        return {
            "alpha": self.params.alpha,
            "gamma": self.gamma,
            "compression": self.params.compression.describe(),
            "mode": self.mode,
        }


def resolve(doc: dict, seed_override: int | None = None) -> ResolvedExperiment:
    """Build live objects from a config document, resolving every "auto"."""
    if seed_override is not None:
        doc = json.loads(json.dumps(doc))
        doc.setdefault("scenario", {})["seed"] = int(seed_override)
    spec = scenario_spec_from_doc(doc)
    scenario = build_scenario(spec)
    delay = delay_from_doc(doc)
    algo = _section(doc, "algorithm")
    consts = scenario.constants()

    alpha = algo.get("alpha", "auto")
    alpha = consts.smoothness if alpha == "auto" else float(alpha)
    if alpha < consts.smoothness * (1.0 - 1e-12):
        raise ConfigError(
            f"alpha={alpha} is below the certified smoothness {consts.smoothness:.6g}"
        )
    gamma = algo.get("gamma", "auto")
    gamma = scenario.mu if gamma == "auto" else float(gamma)
    if not 0.0 < gamma < 2.0 * scenario.mu:
        raise ConfigError(f"gamma={gamma} outside (0, 2*mu) with mu={scenario.mu}")

    compression = compression_from_doc(algo.get("compression", {}), scenario)
    try:
        params = EngineParams(
            alpha=alpha,
            master_steps=int(algo.get("master_steps", 1)),
            worker_steps=int(algo.get("worker_steps", 1)),
            compression=compression,
            init_seed=int(algo.get("init_seed", 0)),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid [algorithm] section: {exc}") from exc

    mode = doc.get("mode", "auto")
    if mode == "auto":
        mode = MODE_ZERO_LOCAL if delay.tau_l == 0 else MODE_LOCAL
    if mode not in (MODE_ZERO_LOCAL, MODE_LOCAL):
        raise ConfigError(f"unknown mode {mode!r}")
    if mode == MODE_ZERO_LOCAL and delay.tau_l != 0:
        raise ConfigError("zero-local-delay mode requires tau_l = 0")
    return ResolvedExperiment(scenario, params, delay, gamma, mode, doc)


# -- built-in presets ---------------------------------------------------------

_ACC_SCENARIO = {
    "workers": 3,
    "block_dim": 4,
    "target_dim": 6,
    "horizon": 500,
    "mu": 1.0,
    "a_max": 1.0,
    "b_scale": 1.0,
    "seed": 42,
    "drift": {"kind": "decaying-walk", "sigma": 0.5, "rho": 0.6},
    "feasible": {"kind": "box", "size": 8.0},
}

PRESETS = {
    "static-sanity": {
        "scenario": {
            "workers": 3, "block_dim": 4, "target_dim": 6, "horizon": 200,
            "mu": 1.0, "a_max": 0.6, "b_scale": 1.0, "seed": 7,
            "drift": {"kind": "static"},
            "feasible": {"kind": "box", "size": 3.0},
        },
        "delay": {"tau_u": 1, "tau_d": 0, "tau_l": 0},
        "algorithm": {"alpha": "auto", "gamma": "auto", "master_steps": 1, "worker_steps": 1},
    },
    "drift-bounds": {
        "scenario": dict(_ACC_SCENARIO),
        "delay": {"tau_u": 1, "tau_d": 0, "tau_l": 0},
        "algorithm": {"alpha": "auto", "gamma": "auto", "master_steps": 2, "worker_steps": 2},
    },
    "drift-bounds-quantized": {
        "scenario": dict(_ACC_SCENARIO),
        "delay": {"tau_u": 1, "tau_d": 0, "tau_l": 0},
        "algorithm": {
            "alpha": "auto", "gamma": "auto", "master_steps": 2, "worker_steps": 2,
            "compression": {"scheme": "quantize", "bits": 8, "range": "auto"},
        },
    },
    "local-delay-bounds": {
        "scenario": dict(_ACC_SCENARIO),
        "delay": {"tau_u": 1, "tau_d": 0, "tau_l": 2},
        "algorithm": {"alpha": "auto", "gamma": "auto", "master_steps": 3, "worker_steps": 3},
    },
}


def preset(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return json.loads(json.dumps(PRESETS[name]))
