"""Run configuration: JSON schema, defaults and model construction."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .model import (
    Diffusion,
    Nonlinearity,
    asymmetric_cubic,
    bump_diffusion,
    constant_diffusion,
    cubic,
    diffusion_from_knots,
    polynomial,
)

__all__ = ["ConfigError", "RunConfig", "SCHEMA", "TASK_ORDER", "load_config", "parse_config",
           "DEFAULT_TOLERANCES"]

TASK_ORDER = ("validate", "ccurves", "equilibria", "sweep", "spectrum", "simulate", "verify-all")

DEFAULT_TOLERANCES = {
    "holdout": 1e-7,       # c-curve interpolation error on held-out points
    "gap": 1e-6,           # relative hyperbolicity band for a' - nu c'
    "spectral": 1e-4,      # relative band for "eigenvalue is zero"
    "sim_distance": 1e-4,  # H^1 distance declaring convergence
    "sim_residual": 1e-6,  # max-norm of u_t declaring convergence
    "lyapunov": 1e-8,      # relative allowance for V increases
    "anchor": 1e-8,
    "roundtrip": 1e-8,
    "scaling": 1e-6,
    "profile_energy": 1e-8,
    "profile_r": 1e-6,
    "timemap_limit": 1e-6,
    "residual": 1e-9,
}

_pos = {"type": "number", "exclusiveMinimum": 0}
_num = {"type": "number"}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["nonlinearity", "diffusion", "tasks"],
    "additionalProperties": False,
    "properties": {
        "nonlinearity": {
            "oneOf": [
                {"type": "object", "additionalProperties": False, "required": ["kind"],
                 "properties": {"kind": {"const": "cubic"}, "kappa": _pos}},
                {"type": "object", "additionalProperties": False, "required": ["kind"],
                 "properties": {"kind": {"const": "asymmetric_cubic"},
                                "kappa_plus": _pos, "kappa_minus": _pos}},
                {"type": "object", "additionalProperties": False, "required": ["kind", "coefficients"],
                 "properties": {"kind": {"const": "polynomial"},
                                "coefficients": {"type": "array", "items": _num, "minItems": 2}}},
            ]
        },
        "diffusion": {
            "oneOf": [
                {"type": "object", "additionalProperties": False, "required": ["kind", "value"],
                 "properties": {"kind": {"const": "constant"}, "value": _pos, "r_max": _pos}},
                {"type": "object", "additionalProperties": False,
                 "required": ["kind", "alpha", "beta", "gamma", "r0"],
                 "properties": {"kind": {"const": "bump"}, "alpha": _num, "beta": _num,
                                "gamma": _pos, "r0": _num, "r_max": _pos}},
                {"type": "object", "additionalProperties": False, "required": ["kind", "knots"],
                 "properties": {"kind": {"const": "knots"}, "r_max": _pos,
                                "knots": {"type": "array", "minItems": 1,
                                          "items": {"type": "array", "items": _num,
                                                    "minItems": 3, "maxItems": 3}}}},
            ]
        },
        "j_max": {"type": "integer", "minimum": 1, "maximum": 8},
        "r_max": {"oneOf": [_pos, {"type": "null"}]},
        "samples": {"type": "integer", "minimum": 20},
        "nu": {"oneOf": [_pos, {"type": "array", "items": _pos, "minItems": 1}]},
        "nu_grid": {"oneOf": [
            {"type": "array", "items": _pos, "minItems": 2},
            {"type": "object", "additionalProperties": False, "required": ["start", "stop", "num"],
             "properties": {"start": _pos, "stop": _pos, "num": {"type": "integer", "minimum": 2}}},
        ]},
        "tasks": {"type": "array", "minItems": 1, "items": {"enum": list(TASK_ORDER)}},
        "output": {"type": "string"},
        "profiles": {"type": "boolean"},
        "tolerances": {"type": "object", "additionalProperties": False,
                       "properties": {k: _pos for k in DEFAULT_TOLERANCES}},
        "spectrum": {"type": "object", "additionalProperties": False,
                     "properties": {"n": {"type": "integer", "minimum": 5},
                                    "refine": {"type": "boolean"},
                                    "eps_points": {"type": "integer", "minimum": 2}}},
        "simulate": {"type": "object", "additionalProperties": False,
                     "properties": {
                         "n": {"type": "integer", "minimum": 8},
                         "t_end": _pos,
                         "dt0": _pos,
                         "form": {"enum": ["quasilinear", "semilinear"]},
                         "runs": {"type": "array", "items": {
                             "type": "object", "additionalProperties": False,
                             "required": ["name", "modes"],
                             "properties": {
                                 "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
                                 "modes": {"type": "array", "minItems": 1, "items": {
                                     "type": "array", "minItems": 2, "maxItems": 2,
                                     "items": _num}},
                                 "perturbation": {"type": "number", "minimum": 0},
                                 "seed": {"type": "integer", "minimum": 0},
                             }}},
                     }},
    },
}


class ConfigError(ValueError):
    """Unparseable or inconsistent configuration (CLI exit status 2)."""


@dataclass(frozen=True)
class RunConfig:
    nl: Nonlinearity
    a: Diffusion
    tasks: tuple[str, ...]
    j_max: int = 4
    r_max: float | None = None
    samples: int = 200
    nu: tuple[float, ...] = ()
    nu_grid: np.ndarray | None = field(default=None, repr=False)
    output: str = "out"
    profiles: bool = False
    tol: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    spectrum: dict = field(default_factory=dict)
    simulate: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False, compare=False)


def _make_nl(entry: dict) -> Nonlinearity:
    kind = entry["kind"]
    if kind == "cubic":
        return cubic(entry.get("kappa", 1.0))
    if kind == "asymmetric_cubic":
        return asymmetric_cubic(entry.get("kappa_plus", 1.0), entry.get("kappa_minus", 0.25))
    return polynomial(entry["coefficients"])


def _make_a(entry: dict) -> Diffusion:
    kind = entry["kind"]
    if kind == "constant":
        return constant_diffusion(entry["value"], entry.get("r_max", 10.0))
    if kind == "bump":
        return bump_diffusion(entry["alpha"], entry["beta"], entry["gamma"], entry["r0"],
                              entry.get("r_max", 10.0))
    return diffusion_from_knots(entry["knots"], entry.get("r_max"))


def parse_config(data: dict, tol_scale: float = 1.0) -> RunConfig:
    """Validate ``data`` against the schema and build the model objects."""
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {exc.message}") from None
    if not tol_scale > 0:
        raise ConfigError("tol-scale must be positive")
    try:
        nl = _make_nl(data["nonlinearity"])
        a = _make_a(data["diffusion"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    tasks = tuple(t for t in TASK_ORDER if t in data["tasks"])
    nu = data.get("nu")
    nu = tuple(float(v) for v in (nu if isinstance(nu, list) else [nu])) if nu is not None else ()
    g = data.get("nu_grid")
    if isinstance(g, dict):
        if g["stop"] <= g["start"]:
            raise ConfigError("nu_grid: stop must exceed start")
        grid = np.linspace(g["start"], g["stop"], g["num"])
    elif g is not None:
        grid = np.asarray(g, dtype=float)
        if np.any(np.diff(grid) <= 0):
            raise ConfigError("nu_grid must be strictly increasing")
    else:
        grid = None
    if "sweep" in tasks and grid is None:
        raise ConfigError("task 'sweep' requires nu_grid")
    for t in ("equilibria", "spectrum", "simulate"):
        if t in tasks and not nu:
            raise ConfigError(f"task '{t}' requires nu")

    tol = dict(DEFAULT_TOLERANCES)
    tol.update(data.get("tolerances", {}))
    tol = {k: v * tol_scale for k, v in tol.items()}
    return RunConfig(nl=nl, a=a, tasks=tasks, j_max=data.get("j_max", 4), r_max=data.get("r_max"),
                     samples=data.get("samples", 200), nu=nu, nu_grid=grid,
                     output=data.get("output", "out"), profiles=data.get("profiles", False),
                     tol=tol, spectrum=data.get("spectrum", {}), simulate=data.get("simulate", {}),
                     raw=data)


def load_config(path: str | Path, tol_scale: float = 1.0) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return parse_config(data, tol_scale)
