"""Experiment configs: JSON validated against a versioned schema, then merged with defaults."""
from __future__ import annotations

import copy
import hashlib
import json
from importlib import resources

import jsonschema

from .checks import DEFAULT_EPS, MACHINE_TOL
from .fock import WeightVector

DEFAULTS = {
    "version": 1,
    "seed": 20261014,
    "space": {"n": 1, "D": 10},
    "quadrature": {"gauss_q": 200, "semi_budget": 400_000, "semi_epsrel": 1e-11},
    "tolerances": {"machine": MACHINE_TOL, "laplace": 1e-6, "power": 1e-8, "berezin_shift": 1e-9,
                   "symbol_backends": 1e-7, "eps_c": DEFAULT_EPS.c},
    "symbols": ["R(1;[1])*R(1;[1i])", "R(1;[1])", "1"],
    "grid": {"lam": [1.0, 2.0, [1.0, 1.0]], "z": [[1.0], [[0.0, 1.0]]], "w": [[0.5]],
             "Ds": [8, 16, 32], "draws": 10, "radii": [0, 1, 2, 4, 8], "alpha_max": 1e4,
             "M_max": 8, "rho": [2.0, 1.4142135623730951]},
}


class ConfigError(ValueError):
    def __init__(self, messages):
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


def schema() -> dict:
    return json.loads(resources.files("resolvent_lab").joinpath("schema/config.schema.json").read_text())


def _path(err) -> str:
    return "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate(raw: dict) -> dict:
    """Schema check plus cross-field checks; returns the merged config."""
    v = jsonschema.Draft202012Validator(schema())
    errs = sorted(v.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errs:
        raise ConfigError(f"{_path(e)}: {e.message}" for e in errs)
    cfg = _merge(DEFAULTS, raw)
    sp = cfg["space"]
    problems = []
    if "t" in sp and len(sp["t"]) != sp["n"]:
        problems.append(f"$.space.t: has {len(sp['t'])} entries but space.n = {sp['n']}")
    if "t" in sp and "t_rule" in sp:
        problems.append("$.space: give t or t_rule, not both")
    for i, z in enumerate(cfg["grid"]["z"]):
        if len(z) != sp["n"]:
            problems.append(f"$.grid.z[{i}]: length {len(z)} but space.n = {sp['n']}")
    for i, w in enumerate(cfg["grid"]["w"]):
        if len(w) != sp["n"]:
            problems.append(f"$.grid.w[{i}]: length {len(w)} but space.n = {sp['n']}")
    for i, lam in enumerate(cfg["grid"]["lam"]):
        if to_complex(lam).real == 0.0:
            problems.append(f"$.grid.lam[{i}]: Re(lambda) must be nonzero")
    if problems:
        raise ConfigError(problems)
    return cfg


def load(path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError([f"$: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}"]) from e
    except OSError as e:
        raise ConfigError([f"cannot read {path}: {e.strerror}"]) from e
    if not isinstance(raw, dict):
        raise ConfigError(["$: top level must be an object"])
    return validate(raw)


def to_complex(v) -> complex:
    return complex(v[0], v[1]) if isinstance(v, list) else complex(v)


def to_vector(v) -> list[complex]:
    return [to_complex(x) for x in v]


def weights(cfg) -> WeightVector:
    sp = cfg["space"]
    if "t" in sp:
        return WeightVector(tuple(sp["t"]))
    if sp.get("t_rule") == "dyadic":
        return WeightVector.dyadic(sp["n"])
    return WeightVector.ones(sp["n"])


def digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def set_path(cfg: dict, dotted: str, value) -> dict:
    """Copy of cfg with a dotted key replaced; the key must already exist."""
    out = copy.deepcopy(cfg)
    node = out
    parts = dotted.split(".")
    for p in parts[:-1]:
        if not isinstance(node, dict) or p not in node:
            raise ConfigError([f"unknown axis {dotted!r}"])
        node = node[p]
    if not isinstance(node, dict) or parts[-1] not in node:
        raise ConfigError([f"unknown axis {dotted!r}"])
    node[parts[-1]] = value
    return out
