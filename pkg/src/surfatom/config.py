"""JSON run configuration: schema, defaults, and object construction.

A config file describes one full pipeline run in literature units (C3 in
kHz um^3, energies in MHz, temperatures in uK).  Validation is strict -
unknown keys are rejected - and `resolve_config` materializes every
default, so the resolved echo emitted with each run is itself a complete,
re-runnable config.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from .eigensolver import GridPolicy
from .errors import ConfigError
from .model import (
    AtomParams,
    FieldParams,
    atom_from_config,
    atom_to_config,
    cesium_silica,
    field_from_config,
)
from .rates import (
    RateProfile,
    load_profile,
    make_evanescent_profile,
    make_guided_profile,
    uniform_profile,
)

_POTENTIAL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["A_Hz", "alpha_inv_nm", "C3_kHz_um3"],
    "properties": {
        "A_Hz": {"type": "number", "exclusiveMinimum": 0},
        "alpha_inv_nm": {"type": "number", "exclusiveMinimum": 0},
        "C3_kHz_um3": {"type": "number", "exclusiveMinimum": 0},
    },
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "atom": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "preset": {"type": "string", "enum": ["cesium-silica"]},
                "mass_amu": {"type": "number", "exclusiveMinimum": 0},
                "gamma0_MHz": {"type": "number", "exclusiveMinimum": 0},
                "lambda0_nm": {"type": "number", "exclusiveMinimum": 0},
                "ground_potential": _POTENTIAL_SCHEMA,
                "excited_potential": _POTENTIAL_SCHEMA,
            },
        },
        "field": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "wavelength_nm": {"type": "number", "exclusiveMinimum": 0},
                "saturation_s": {"type": "number", "minimum": 0},
                "reflection_R": {"type": "number", "minimum": 0,
                                 "exclusiveMaximum": 1},
                "refractive_index_n1": {"type": "number", "minimum": 1},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "inner_step_nm": {"type": "number", "exclusiveMinimum": 0},
                "anchor_nm": {"type": "number", "exclusiveMinimum": 0},
                "max_step_nm": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "basis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "nu_a": {"type": "array", "items": {"type": "integer", "minimum": 0},
                         "minItems": 2, "maxItems": 2},
                "nu_b": {"type": "array", "items": {"type": "integer", "minimum": 0},
                         "minItems": 2, "maxItems": 2},
                "free": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "e_min_kHz": {"type": "number", "exclusiveMinimum": 0},
                        "e_cut_over_kT": {"type": "number", "exclusiveMinimum": 0},
                        "n_nodes": {"type": "integer", "minimum": 2},
                    },
                },
            },
        },
        "profile": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"type": "string",
                         "enum": ["guided-parametric", "evanescent-parametric",
                                  "uniform", "file"]},
                # guided-parametric
                "g_short": {"type": "number", "minimum": 0, "maximum": 1},
                "l_short_nm": {"type": "number", "exclusiveMinimum": 0},
                "g_long": {"type": "number", "minimum": 0, "maximum": 1},
                "l_long_nm": {"type": "number", "exclusiveMinimum": 0},
                # evanescent-parametric
                "g0": {"type": "number", "minimum": 0, "maximum": 1},
                "kappa_inv_nm": {"type": "number", "exclusiveMinimum": 0},
                # shared
                "enhancement": {"type": "number", "minimum": 1},
                # uniform
                "channel_fraction": {"type": "number", "minimum": 0, "maximum": 1},
                # file
                "path": {"type": "string"},
                "channel": {"type": "string", "enum": ["evanescent", "guided"]},
            },
        },
        "mixture": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"type": "string", "enum": ["thermal-free", "flat-bound"]},
                "temperature_uK": {"type": "number", "exclusiveMinimum": 0},
                "nu_min": {"type": "integer", "minimum": 0},
                "nu_max": {"type": "integer", "minimum": 0},
            },
        },
        "detuning": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "min_MHz": {"type": "number"},
                "max_MHz": {"type": "number"},
                "step_MHz": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "spectrum": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "channel": {"type": "string",
                            "enum": ["total", "channel", "radiation"]},
                "use_reflection": {"type": "boolean"},
            },
        },
        "lz": {"type": "integer", "minimum": 0},
        "threads": {"type": "integer", "minimum": 1},
        "cache_dir": {"type": ["string", "null"]},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"path": {"type": ["string", "null"]}},
        },
    },
}

_DEFAULTS = {
    "field": {"wavelength_nm": 852.0, "saturation_s": 1e-3, "reflection_R": 0.0},
    "grid": {"inner_step_nm": 5e-5, "anchor_nm": 2.0, "max_step_nm": 0.4},
    "basis": {
        "nu_a": [385, 429],
        "nu_b": [269, 293],
        "free": {"e_min_kHz": 1.0, "e_cut_over_kT": 10.0, "n_nodes": 64},
    },
    "profile": {"kind": "guided-parametric", "g_short": 0.2, "l_short_nm": 25.0,
                "g_long": 0.025, "l_long_nm": 3000.0, "enhancement": 1.15},
    "mixture": {"kind": "thermal-free", "temperature_uK": 200.0},
    "detuning": {"min_MHz": -150.0, "max_MHz": 50.0, "step_MHz": 0.25},
    "spectrum": {"channel": "channel", "use_reflection": True},
    "lz": 10,
    "threads": 1,
    "cache_dir": None,
    "output": {"path": None},
}

_PROFILE_KEYS = {
    "guided-parametric": {"kind", "g_short", "l_short_nm", "g_long",
                          "l_long_nm", "enhancement"},
    "evanescent-parametric": {"kind", "g0", "kappa_inv_nm", "enhancement"},
    "uniform": {"kind", "channel_fraction"},
    "file": {"kind", "path", "channel"},
}

_PROFILE_DEFAULTS = {
    "guided-parametric": _DEFAULTS["profile"],
    "evanescent-parametric": {"kind": "evanescent-parametric", "g0": 0.2,
                              "kappa_inv_nm": 1.0 / 140.0, "enhancement": 1.3},
    "uniform": {"kind": "uniform", "channel_fraction": 0.0},
    "file": {"kind": "file", "channel": "guided"},
}

_MIXTURE_KEYS = {
    "thermal-free": {"kind", "temperature_uK"},
    "flat-bound": {"kind", "nu_min", "nu_max"},
}


def validate_config(raw: dict) -> None:
    """Schema-check a raw config dict; raises ConfigError with the path."""
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    prof = raw.get("profile")
    if prof is not None:
        allowed = _PROFILE_KEYS[prof["kind"]]
        extra = set(prof) - allowed
        if extra:
            raise ConfigError(
                f"profile kind {prof['kind']!r} does not accept keys {sorted(extra)}")
        if prof["kind"] == "file" and "path" not in prof:
            raise ConfigError("profile kind 'file' requires a path")
    mix = raw.get("mixture")
    if mix is not None:
        allowed = _MIXTURE_KEYS[mix["kind"]]
        extra = set(mix) - allowed
        if extra:
            raise ConfigError(
                f"mixture kind {mix['kind']!r} does not accept keys {sorted(extra)}")
    atom = raw.get("atom")
    if atom is not None and "preset" not in atom:
        missing = {"mass_amu", "gamma0_MHz", "lambda0_nm", "ground_potential",
                   "excited_potential"} - set(atom)
        if missing:
            raise ConfigError(
                f"atom section needs a preset or full parameters; missing {sorted(missing)}")
    if atom is not None and "preset" in atom and len(atom) > 1:
        raise ConfigError("atom preset cannot be combined with explicit parameters")


def resolve_config(raw: dict) -> dict:
    """Validate and return a copy with every default filled in.

    The result validates too, so the resolved echo can be re-fed as a
    config and reproduces the run.
    """
    validate_config(raw)
    cfg = copy.deepcopy(raw)
    atom = cfg.get("atom", {"preset": "cesium-silica"})
    if "preset" in atom:
        cfg["atom"] = atom_to_config(cesium_silica())
    for key in ("field", "grid", "detuning", "spectrum", "output"):
        merged = dict(_DEFAULTS[key])
        merged.update(cfg.get(key, {}))
        cfg[key] = merged
    if "refractive_index_n1" in cfg["field"]:
        if "reflection_R" in cfg.get("field", {}) and "reflection_R" in raw.get("field", {}):
            raise ConfigError(
                "field: give either reflection_R or refractive_index_n1, not both")
        cfg["field"].pop("reflection_R", None)
    basis = copy.deepcopy(_DEFAULTS["basis"])
    for key, val in cfg.get("basis", {}).items():
        if key == "free":
            basis["free"].update(val)
        else:
            basis[key] = list(val)
    cfg["basis"] = basis
    for lohi in (basis["nu_a"], basis["nu_b"]):
        if lohi[0] > lohi[1]:
            raise ConfigError(f"basis range {lohi} must be [lo, hi] with lo <= hi")
    kind = cfg.get("profile", {}).get("kind", "guided-parametric")
    prof = dict(_PROFILE_DEFAULTS[kind])
    prof.update(cfg.get("profile", {}))
    cfg["profile"] = prof
    mkind = cfg.get("mixture", {}).get("kind", "thermal-free")
    mix = {"kind": mkind}
    if mkind == "thermal-free":
        mix["temperature_uK"] = 200.0
    else:
        mix["nu_min"], mix["nu_max"] = basis["nu_b"]
    mix.update(cfg.get("mixture", {}))
    cfg["mixture"] = mix
    if mkind == "flat-bound":
        if not basis["nu_b"][0] <= mix["nu_min"] <= mix["nu_max"] <= basis["nu_b"][1]:
            raise ConfigError("flat-bound mixture range must lie inside basis nu_b")
    if cfg["detuning"]["max_MHz"] <= cfg["detuning"]["min_MHz"]:
        raise ConfigError("detuning grid must be increasing")
    for key in ("lz", "threads", "cache_dir"):
        cfg.setdefault(key, _DEFAULTS[key])
    validate_config(cfg)
    return cfg


def load_config(path: str | Path | None) -> dict:
    """Read, validate, and resolve a config file (None -> all defaults)."""
    if path is None:
        return resolve_config({})
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return resolve_config(raw)


@dataclass(frozen=True)
class RunConfig:
    """Constructed objects plus the resolved dict they came from."""

    atom: AtomParams
    field: FieldParams
    policy: GridPolicy
    resolved: dict

    @property
    def nu_a(self) -> range:
        lo, hi = self.resolved["basis"]["nu_a"]
        return range(lo, hi + 1)

    @property
    def nu_b(self) -> range:
        lo, hi = self.resolved["basis"]["nu_b"]
        return range(lo, hi + 1)


def build_runconfig(resolved: dict) -> RunConfig:
    atom = atom_from_config(resolved["atom"])
    field = field_from_config(resolved["field"])
    g = resolved["grid"]
    policy = GridPolicy(inner_step_nm=g["inner_step_nm"],
                        anchor_nm=g["anchor_nm"],
                        max_step_nm=g["max_step_nm"])
    return RunConfig(atom=atom, field=field, policy=policy, resolved=resolved)


def build_profile(spec: dict, gamma0_hz: float) -> RateProfile:
    """Construct the emission-rate profile a config asks for."""
    kind = spec["kind"]
    if kind == "guided-parametric":
        return make_guided_profile(gamma0_hz, g_short=spec["g_short"],
                                   l_short_nm=spec["l_short_nm"],
                                   g_long=spec["g_long"],
                                   l_long_nm=spec["l_long_nm"],
                                   enhancement=spec["enhancement"])
    if kind == "evanescent-parametric":
        return make_evanescent_profile(gamma0_hz, g0=spec["g0"],
                                       kappa_inv_nm=spec["kappa_inv_nm"],
                                       enhancement=spec["enhancement"])
    if kind == "uniform":
        return uniform_profile(gamma0_hz, channel_fraction=spec["channel_fraction"])
    return load_profile(spec["path"], channel=spec.get("channel", "guided"))
