"""Run configuration: strict YAML parsing, defaults, and a stable hash.

The normalized configuration (defaults filled in) is what gets hashed and
echoed into every artifact, so a result file alone identifies the exact
inputs that produced it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import yaml

from .mc import McConfig

SCAN_FAMILIES = ("qp", "bilinear", "combined-site", "combined-edge")
ENSEMBLE_FAMILIES = ("qp", "bilinear", "combined", "gauge-qp", "gauge-bilinear")
MODES = ("scan", "boundary", "ensemble")


class ConfigError(ValueError):
    """Invalid run configuration (unknown key, bad type, missing field)."""


_DEFAULTS = {
    "rates": {"qp": 0.0, "bilinear": 0.0, "measurement": 0.0},
    "rounds": 1,
    "color": 0,
    "nishimori": False,
    "betas": None,
    "grid": None,
    "mc": {
        "measure_interval": 8,
        "checkpoint_interval": 0,
        "init": "random",
        "n_bootstrap": 1000,
    },
    "wilson": {"temporal_tubes": False},
    "output": {"directory": "out", "prefix": None},
}

_SCHEMA = {
    "mode": str,
    "family": str,
    "lattice": {"sizes": list, "cells": list},
    "rates": {"qp": (int, float), "bilinear": (int, float), "measurement": (int, float)},
    "rounds": int,
    "color": int,
    "grid": list,
    "betas": list,
    "nishimori": bool,
    "mc": {
        "sweeps": int,
        "thermalization": int,
        "measure_interval": int,
        "n_disorder": int,
        "master_seed": int,
        "checkpoint_interval": int,
        "init": str,
        "n_bootstrap": int,
    },
    "wilson": {"temporal_tubes": bool},
    "output": {"directory": str, "prefix": (str, type(None))},
}


def _check_keys(data: dict, schema: dict, path: str = "") -> None:
    for key, value in data.items():
        where = f"{path}{key}"
        if key not in schema:
            known = ", ".join(sorted(schema))
            raise ConfigError(f"unknown config key {where!r} (known keys: {known})")
        rule = schema[key]
        if isinstance(rule, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where!r} must be a section")
            _check_keys(value, rule, where + ".")
        elif value is not None and not isinstance(value, rule):
            want = rule.__name__ if isinstance(rule, type) else "/".join(
                t.__name__ for t in rule
            )
            raise ConfigError(
                f"config key {where!r} must be {want}, got {type(value).__name__}"
            )
        if rule is int and isinstance(value, bool):
            raise ConfigError(f"config key {where!r} must be int, got bool")


def _merged(defaults, data):
    if isinstance(defaults, dict) and isinstance(data, dict):
        out = {}
        for k in sorted(set(defaults) | set(data)):
            if k in data and k in defaults:
                out[k] = _merged(defaults[k], data[k])
            else:
                out[k] = data.get(k, defaults.get(k))
        return out
    return data


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


@dataclass(frozen=True)
class RunConfig:
    """Validated, normalized run configuration."""

    data: dict

    def __getitem__(self, key):
        return self.data[key]

    @property
    def mode(self) -> str:
        return self.data["mode"]

    @property
    def family(self) -> str:
        return self.data["family"]

    @property
    def master_seed(self) -> int:
        return self.data["mc"]["master_seed"]

    @property
    def prefix(self) -> str:
        return self.data["output"]["prefix"] or f"{self.family}_{self.mode}"

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.data, sort_keys=True).encode()
        ).hexdigest()[:16]

    def mc_config(self, betas=(1.0,)) -> McConfig:
        mc = self.data["mc"]
        return McConfig(
            betas=tuple(betas),
            sweeps=mc["sweeps"],
            thermalization=mc["thermalization"],
            measure_interval=mc["measure_interval"],
            n_disorder=mc["n_disorder"],
            master_seed=mc["master_seed"],
            checkpoint_interval=mc["checkpoint_interval"],
            init=mc["init"],
        )


def _validate(data: dict) -> None:
    _require("mode" in data, "config must set 'mode' (scan, boundary or ensemble)")
    _require(data["mode"] in MODES, f"mode must be one of {MODES}, got {data['mode']!r}")
    _require("family" in data, "config must set 'family'")
    mode, family = data["mode"], data["family"]

    mc = data.get("mc", {})
    for key in ("sweeps", "thermalization", "n_disorder", "master_seed"):
        _require(key in mc, f"config must set 'mc.{key}'")
    _require(mc["sweeps"] > 0, "mc.sweeps must be positive")
    _require(0 <= mc["thermalization"] < mc["sweeps"],
             "need 0 <= mc.thermalization < mc.sweeps")
    _require(mc["n_disorder"] >= 1, "mc.n_disorder must be >= 1")
    _require(mc["init"] in ("random", "plus"), "mc.init must be 'random' or 'plus'")

    rates = data["rates"]
    for k, v in rates.items():
        _require(0.0 <= v <= 0.5, f"rates.{k} must lie in [0, 0.5], got {v}")

    lattice = data.get("lattice", {})
    if mode in ("scan", "boundary"):
        _require(family in SCAN_FAMILIES,
                 f"mode {mode!r} supports families {SCAN_FAMILIES}, got {family!r}")
        _require("sizes" in lattice, f"mode {mode!r} needs 'lattice.sizes'")
        sizes = lattice["sizes"]
        _require(len(sizes) >= 2, "need at least 2 lattice sizes for crossings")
        _require(all(isinstance(s, int) and s >= 6 and s % 3 == 0 for s in sizes),
                 "lattice.sizes must be multiples of 3, each >= 6")
        grid = data.get("grid")
        _require(bool(grid), f"mode {mode!r} needs a 'grid' of error rates")
        _require(all(isinstance(g, (int, float)) and 0 < g < 0.5 for g in grid),
                 "grid values must lie inside (0, 0.5)")
        if mode == "scan":
            _require(len(grid) >= 2, "scan grid needs at least 2 rates")
        if mode == "boundary":
            betas = data.get("betas")
            _require(bool(betas) and len(betas) >= 2,
                     "mode 'boundary' needs an ascending 'betas' grid (>= 2 values)")
        if family == "combined-site":
            _require(0 < rates["bilinear"] <= 0.5,
                     "family 'combined-site' needs the fixed rate 'rates.bilinear'")
        if family == "combined-edge":
            _require(0 < rates["qp"] <= 0.5,
                     "family 'combined-edge' needs the fixed rate 'rates.qp'")
    else:  # ensemble
        _require(family in ENSEMBLE_FAMILIES,
                 f"mode 'ensemble' supports families {ENSEMBLE_FAMILIES}, got {family!r}")
        _require("cells" in lattice, "mode 'ensemble' needs 'lattice.cells' = [l1, l2]")
        cells = lattice["cells"]
        _require(len(cells) == 2 and all(isinstance(c, int) and c >= 2 for c in cells),
                 "lattice.cells must be two integers >= 2")
        has_betas = bool(data.get("betas"))
        _require(has_betas != bool(data["nishimori"]),
                 "mode 'ensemble' needs exactly one of 'betas' or 'nishimori: true'")
        if has_betas:
            betas = data["betas"]
            _require(all(b2 > b1 for b1, b2 in zip(betas, betas[1:])),
                     "betas must be strictly ascending")
        _require(data["rounds"] >= 1, "rounds must be >= 1")
        _require(0 <= data["color"] <= 2, "color must be 0, 1 or 2")
        if data["wilson"]["temporal_tubes"]:
            _require(family.startswith("gauge-"),
                     "wilson.temporal_tubes requires a gauge family")
        if family == "combined":
            _require(rates["qp"] > 0 and rates["bilinear"] > 0,
                     "family 'combined' needs nonzero rates.qp and rates.bilinear")
    _require(isinstance(data["output"]["directory"], str)
             and data["output"]["directory"] != "",
             "output.directory must be a non-empty path")


def parse_config(text: str) -> RunConfig:
    """Parse and validate YAML text into a normalized RunConfig."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"config parse error{where}: {problem}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping of sections")
    _check_keys(raw, _SCHEMA)
    data = _merged(_DEFAULTS, raw)
    _validate(data)
    return RunConfig(data=data)


def load_config(path: str) -> RunConfig:
    with open(path) as f:
        return parse_config(f.read())
