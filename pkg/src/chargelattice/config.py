"""Run configurations: JSON schema, presets and builders for library objects."""
from __future__ import annotations

import copy
import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from . import lattice as lat
from .charges import (ChargeConfiguration, alternating, cosine_config, honeycomb_triangular,
                      random_configuration)
from .potentials import Potential, from_config

__all__ = ["ConfigError", "RunConfig", "PRESETS", "CONFIG_SCHEMA", "OUTPUT_SCHEMAS", "load_config",
           "preset", "read_output"]

ROUTES = ("direct", "convergence-factor", "ewald", "spectral", "epstein")

_NUMBER = {"type": "number"}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "lattice": {
            "oneOf": [
                {"type": "string", "enum": ["cubic", "square", "triangular", "chain"]},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "preset": {"enum": ["cubic", "orthorhombic", "triangular"]},
                        "d": {"type": "integer", "minimum": 1, "maximum": 4},
                        "sides": {"type": "array", "items": _NUMBER, "minItems": 1, "maxItems": 4},
                        "basis": {"enum": ["acute", "obtuse"]},
                        "generator": {"type": "array", "items": {"type": "array", "items": _NUMBER}},
                        "normalize": {"type": "boolean"},
                    },
                },
            ]
        },
        "potential": {
            "type": "object",
            "properties": {"kind": {"type": "string"}, "s": _NUMBER, "t0": _NUMBER, "weight": _NUMBER},
            "required": ["kind"],
        },
        "N": {"type": "integer", "minimum": 1},
        "charges": {
            "oneOf": [
                {"enum": ["alternating", "honeycomb", "random", "optimal"]},
                {
                    "type": "object",
                    "properties": {
                        "N": {"type": "integer", "minimum": 1},
                        "values": {"type": "array", "items": _NUMBER},
                        "cosine": {"type": "array", "items": _NUMBER},
                        "neutral": {"type": "boolean"},
                    },
                },
            ]
        },
        "routes": {"type": "array", "items": {"enum": list(ROUTES)}, "minItems": 1, "uniqueItems": True},
        "alpha": {"type": "number", "exclusiveMinimum": 0},
        "alphas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "grid": {"type": "integer"},
        "tol": {"type": "number", "minimum": 1e-14, "maximum": 1e-2},
        "seed": {"type": "integer", "minimum": 0},
        "samples": {"type": "integer", "minimum": 0},
        "modes_csv": {"type": "boolean"},
        "out": {"type": "string"},
    },
    "required": ["lattice"],
}

PRESETS = {
    "cubic": {"lattice": "cubic", "grid": 16},
    "triangular": {"lattice": {"preset": "triangular", "basis": "obtuse"},
                   "potential": {"kind": "riesz", "s": 1.0}, "N": 3, "charges": "honeycomb",
                   "routes": ["ewald", "convergence-factor", "epstein"], "grid": 24},
    "madelung": {"lattice": "cubic", "potential": {"kind": "riesz", "s": 1.0}, "N": 2,
                 "charges": "alternating", "routes": ["ewald", "convergence-factor", "epstein"]},
    "chain-coulomb": {"lattice": "chain", "potential": {"kind": "riesz", "s": 1.0}, "N": 2,
                      "charges": "alternating", "routes": ["ewald", "convergence-factor", "epstein"]},
    "chain-s2": {"lattice": "chain", "potential": {"kind": "riesz", "s": 2.0}, "N": 2,
                 "charges": "alternating", "routes": ["direct", "ewald", "spectral", "convergence-factor"]},
    "born-cubic": {"lattice": "cubic", "potential": {"kind": "riesz", "s": 1.0}, "N": 2,
                   "charges": "alternating"},
    "born-cubic-s3": {"lattice": "cubic", "potential": {"kind": "riesz", "s": 3.0}, "N": 2,
                      "charges": "alternating"},
    "square-s3": {"lattice": "square", "potential": {"kind": "riesz", "s": 3.0}, "N": 2,
                  "charges": "alternating", "routes": ["direct", "spectral", "ewald", "convergence-factor"]},
    "orthorhombic-gaussian": {"lattice": {"preset": "orthorhombic", "sides": [1.0, 2.0]},
                              "potential": {"kind": "gaussian", "t0": math.pi, "weight": 1.0}, "N": 2,
                              "charges": "alternating",
                              "routes": ["direct", "spectral", "ewald", "convergence-factor"]},
}


class ConfigError(ValueError):
    pass


def _finite(obj, path="config"):
    if isinstance(obj, float) and not math.isfinite(obj):
        raise ConfigError(f"{path} must be finite")
    if isinstance(obj, dict):
        for k, v in obj.items():
            _finite(v, f"{path}.{k}")
    if isinstance(obj, list):
        for i, v in enumerate(obj):
            _finite(v, f"{path}[{i}]")


@dataclass(frozen=True)
class RunConfig:
    raw: dict

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        try:
            jsonschema.validate(raw, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "config"
            raise ConfigError(f"{where}: {exc.message}") from None
        _finite(raw)
        return cls(copy.deepcopy(raw))

    def get(self, key, default=None):
        return self.raw.get(key, default)

    def with_overrides(self, **kw) -> "RunConfig":
        raw = copy.deepcopy(self.raw)
        raw.update({k: v for k, v in kw.items() if v is not None})
        return RunConfig.from_dict(raw)

    @property
    def tol(self) -> float:
        return float(self.raw.get("tol", 1e-12))

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    def lattice(self) -> lat.BravaisLattice:
        entry = self.raw["lattice"]
        try:
            if isinstance(entry, str):
                return {"cubic": lambda: lat.cubic(3), "square": lambda: lat.cubic(2),
                        "chain": lambda: lat.cubic(1), "triangular": lat.triangular}[entry]()
            if "generator" in entry:
                L = lat.from_generator(np.array(entry["generator"], dtype=float))
            elif entry.get("preset") == "triangular":
                L = lat.triangular(entry.get("basis", "acute"))
            elif entry.get("preset") == "orthorhombic":
                if "sides" not in entry:
                    raise ConfigError("orthorhombic lattice needs 'sides'")
                L = lat.orthorhombic(*entry["sides"])
            elif entry.get("preset") == "cubic":
                L = lat.cubic(int(entry.get("d", 3)))
            else:
                raise ConfigError("lattice needs a preset or a generator")
        except lat.LatticeError as exc:
            raise ConfigError(str(exc)) from None
        return lat.normalize_density(L) if entry.get("normalize") else L

    def potential(self) -> Potential:
        if "potential" not in self.raw:
            raise ConfigError("this command needs a potential")
        try:
            return from_config(self.raw["potential"])
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"potential: {exc}") from None

    @property
    def N(self) -> int:
        if "N" not in self.raw:
            raise ConfigError("this command needs the period N")
        return int(self.raw["N"])

    def charges(self, L: lat.BravaisLattice) -> ChargeConfiguration:
        entry = self.raw.get("charges", "alternating")
        N = self.raw.get("N")
        try:
            if entry == "alternating":
                if N not in (None, 2):
                    raise ConfigError("alternating charges have period 2")
                return alternating(L)
            if entry == "honeycomb":
                if L.dim != 2 or N not in (None, 3):
                    raise ConfigError("honeycomb charges need a 2-d lattice and period 3")
                return honeycomb_triangular(L)
            if entry == "random":
                rng = np.random.default_rng(self.seed)
                return random_configuration(L, self.N, rng, neutral=True)
            if entry == "optimal":
                raise ConfigError("'optimal' charges are produced by the optimize command")
            if "values" in entry:
                return ChargeConfiguration.from_dict({"N": entry.get("N", N), "values": entry["values"]}, L)
            if "cosine" in entry:
                lam = np.asarray(entry["cosine"], dtype=float)
                return cosine_config(L, self.N, L.dual_generator @ lam,
                                     require_neutral=entry.get("neutral", True))
        except (ValueError, KeyError, TypeError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"charges: {exc}") from None
        raise ConfigError("charges need 'values' or 'cosine'")


def preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return RunConfig.from_dict({"name": name, **copy.deepcopy(PRESETS[name])})


def load_config(path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return RunConfig.from_dict(raw)


_REPORT = {
    "type": "object",
    "required": ["value", "route", "error"],
    "properties": {"value": _NUMBER, "route": {"type": "string"}, "error": _NUMBER},
}

OUTPUT_SCHEMAS = {
    "energy.json": {
        "type": "object",
        "required": ["routes", "agreement", "config"],
        "properties": {"routes": {"type": "object", "additionalProperties": _REPORT}},
    },
    "verify.json": {
        "type": "object",
        "required": ["match", "energy", "brute_force_energy", "configuration", "k0", "degeneracy"],
        "properties": {"match": {"type": "boolean"}, "k0": {"type": "array", "items": {"type": "integer"}}},
    },
    "optimize.json": {
        "type": "object",
        "required": ["theta", "config"],
        "properties": {"theta": {"type": "object", "required": ["points", "alphas", "consistent"]}},
    },
    "configuration.json": {
        "type": "object",
        "required": ["N", "values"],
        "properties": {"N": {"type": "integer"}, "values": {"type": "array", "items": _NUMBER}},
    },
}

CSV_HEADERS = {
    "theta.csv": lambda d: [f"l{i + 1}" for i in range(d)] + ["alpha", "value", "branch", "tail"],
    "landscape.csv": lambda d: [f"l{i + 1}" for i in range(d)] + ["alpha", "value", "branch", "tail"],
    "modes.csv": lambda d: [f"k{i + 1}" for i in range(d)] + ["energy", "route"],
    "configuration.csv": lambda d: ([f"m{i + 1}" for i in range(d)] + [f"x{i + 1}" for i in range(d)]
                                    + ["charge"]),
}


def read_output(path):
    """Parse an output file and check it against its schema or header."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        data = json.loads(text)
        schema = OUTPUT_SCHEMAS.get(path.name)
        if schema is not None:
            jsonschema.validate(data, schema)
        return data
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError(f"{path} is empty")
    header = rows[0]
    coords = sum(1 for h in header if h[:1] in "lkm" and h[1:].isdigit())
    make = CSV_HEADERS.get(path.name)
    if make is not None and header != make(coords):
        raise ValueError(f"{path} has header {header}, expected {make(coords)}")
    if any(len(r) != len(header) for r in rows[1:]):
        raise ValueError(f"{path} has ragged rows")
    return header, rows[1:]
