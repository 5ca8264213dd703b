"""Run configuration: JSON schema, overrides and object factories."""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from typing import Any

import jsonschema

from .debranges import BlaschkeSpec, ModelSpaceKernel
from .errors import ArgumentError
from .grid import RULES, Grid, build_grid
from .kernels import (
    KernelSpec,
    PerturbedSine,
    Sine,
    airy_kernel,
    bessel_kernel,
    discrete_sine_kernel,
    gaussian_rank_one,
    sine_column_rank_one,
)

COMMANDS = ("extract-ab", "verify-division", "continue", "poles", "blaschke", "kernel-eval",
            "sample-dpp", "gap-prob", "trace-report", "stability")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int = {"type": "integer"}
_pair = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}
_interval = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}
_points = {"type": "array", "items": _pair}
_numbers = {"type": "array", "items": _num}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


KERNEL_SCHEMA = {
    "oneOf": [
        _obj({"type": {"const": "sine"}, "a": _pos}, ["type"]),
        _obj({"type": {"const": "perturbed-sine"}, "a": _pos, "lambdas": _points}, ["type"]),
        _obj({"type": {"const": "model-space"}, "a": _pos, "lambdas_plus": _points, "lambdas_minus": _points}, ["type"]),
        _obj({"type": {"const": "airy"}}, ["type"]),
        _obj({"type": {"const": "bessel"}, "s": {"type": "number", "exclusiveMinimum": -1}}, ["type", "s"]),
        _obj({"type": {"const": "discrete-sine"}, "theta": _pos}, ["type", "theta"]),
        _obj({"type": {"const": "gaussian"}, "center": _num, "width": _pos}, ["type"]),
        _obj({"type": {"const": "sine-column"}, "q": _num, "a": _pos}, ["type", "q"]),
    ]
}

GRID_SCHEMA = _obj({
    "domain": _interval,
    "n": {"type": "integer", "minimum": 2},
    "rule": {"enum": list(RULES)},
}, ["domain", "n"])

# per command: parameter schema and defaults
PARAMS = {
    "extract-ab": ({"p": _num, "anchor_floor": _pos}, {"p": 0.0, "anchor_floor": 1e-8}),
    "verify-division": ({"kind": {"enum": ["strong", "weak"]}, "center": _num, "tolerance": _pos,
                         "n_anchors": {"type": "integer", "minimum": 1}},
                        {"kind": "strong", "center": 0.0, "tolerance": 1e-3, "n_anchors": None}),
    "continue": ({"kind": {"enum": ["strong", "ratio"]}, "center": _num, "q": _num, "z": _points,
                  "n_anchors": {"type": "integer", "minimum": 1}},
                 {"kind": "strong", "center": 0.5, "q": 0.0, "z": [[0.0, 1.0]], "n_anchors": None}),
    "poles": ({"kind": {"enum": ["strong", "weak"]}, "center": _num, "centers": _numbers,
               "cosine": _pos, "persist": _pos, "collar": {"type": "number", "minimum": 0},
               "n_anchors": {"type": "integer", "minimum": 1}},
              {"kind": "strong", "center": 0.3, "centers": None, "cosine": 0.99, "persist": 1e-2,
               "collar": 0.05, "n_anchors": None}),
    "blaschke": ({"points": _points, "halfplane": {"enum": ["upper", "lower"]}, "cap": _pos,
                  "generator": _obj({"type": {"const": "imaginary-ladder"}, "terms": {"type": "integer", "minimum": 1}},
                                    ["type", "terms"]),
                  "z": _points},
                 {"points": [], "halfplane": "lower", "cap": 5.0, "generator": None, "z": []}),
    "kernel-eval": ({"x": _numbers, "y": _numbers, "matrix": {"type": "boolean"}},
                    {"x": [0.0], "y": [0.0], "matrix": False}),
    "sample-dpp": ({"window": _interval, "samples": {"type": "integer", "minimum": 1}},
                   {"window": None, "samples": 1}),
    "gap-prob": ({"s": {"type": "number", "minimum": 0}, "n_quad": {"type": "integer", "minimum": 10}},
                 {"s": 1.0, "n_quad": 40}),
    "trace-report": ({"omega": _interval, "epsilon": _pos, "anchor": _num},
                     {"omega": None, "epsilon": None, "anchor": None}),
    "stability": ({"p": _num, "bandwidths": {"type": "array", "items": _pos, "minItems": 1}},
                  {"p": 0.0, "bandwidths": [1 + 1 / n for n in range(1, 11)]}),
}

NEEDS_KERNEL = set(COMMANDS) - {"blaschke"}
NEEDS_GRID = set(COMMANDS) - {"blaschke", "kernel-eval", "gap-prob"}


def schema_for(command: str) -> dict:
    props, defaults = PARAMS[command]
    # parameters defaulting to None accept an explicit null, so resolved configs round-trip
    props = {k: ({"anyOf": [v, {"type": "null"}]} if defaults.get(k, 0) is None else v) for k, v in props.items()}
    required = []
    if command in NEEDS_KERNEL:
        required.append("kernel")
    if command in NEEDS_GRID:
        required.append("grid")
    return _obj({
        "command": {"const": command},
        "kernel": KERNEL_SCHEMA,
        "grid": GRID_SCHEMA,
        "params": _obj(props),
        "seed": {"type": "integer", "minimum": 0},
        "output": {"type": "string"},
        "version": {"type": "string"},
    }, required)


class ConfigError(ArgumentError):
    kind = "config-error"


def parse_override(item: str) -> tuple[list, Any]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, raw = item.split("=", 1)
    path = [k for k in key.strip().split(".") if k]
    if not path:
        raise ConfigError(f"empty key in override {item!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return path, value


def apply_overrides(cfg: dict, overrides) -> dict:
    out = copy.deepcopy(cfg)
    for item in overrides or ():
        path, value = parse_override(item)
        node = out
        for k in path[:-1]:
            nxt = node.get(k)
            if nxt is None:
                nxt = node[k] = {}
            if not isinstance(nxt, dict):
                raise ConfigError(f"cannot set {'.'.join(path)}: {k} is not a block")
            node = nxt
        node[path[-1]] = value
    return out


def _finite(obj, where="config"):
    if isinstance(obj, float) and not math.isfinite(obj):
        raise ConfigError(f"non-finite number in {where}")
    if isinstance(obj, dict):
        for k, v in obj.items():
            _finite(v, f"{where}.{k}")
    elif isinstance(obj, list):
        for v in obj:
            _finite(v, where)


@dataclass(frozen=True)
class RunConfig:
    command: str
    kernel: dict | None
    grid: dict | None
    params: dict
    seed: int
    output: str

    def resolved(self, version: str) -> dict:
        d = {"command": self.command, "params": self.params, "seed": self.seed,
             "output": self.output, "version": version}
        if self.kernel is not None:
            d["kernel"] = self.kernel
        if self.grid is not None:
            d["grid"] = self.grid
        return d


def validate(command: str, cfg: dict) -> RunConfig:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    _finite(cfg)
    try:
        jsonschema.validate(cfg, schema_for(command))
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {loc}: {exc.message}") from None
    _, defaults = PARAMS[command]
    params = dict(defaults)
    params.update(cfg.get("params", {}))
    grid = None
    if "grid" in cfg:
        grid = {"rule": "gauss-legendre", **cfg["grid"]}
    kernel = dict(cfg["kernel"]) if "kernel" in cfg else None
    return RunConfig(command, kernel, grid, params, int(cfg.get("seed", 0)), cfg.get("output", "out"))


def _complex_list(pairs) -> tuple:
    return tuple(complex(re, im) for re, im in pairs)


def make_kernel(block: dict) -> KernelSpec:
    t = block["type"]
    if t == "sine":
        return Sine(block.get("a", 1.0))
    if t == "perturbed-sine":
        return PerturbedSine(block.get("a", 1.0), _complex_list(block.get("lambdas", [[0.0, -1.0]])))
    if t == "model-space":
        return ModelSpaceKernel(BlaschkeSpec(_complex_list(block.get("lambdas_plus", [])),
                                             _complex_list(block.get("lambdas_minus", [])), block.get("a", 1.0)))
    if t == "airy":
        return airy_kernel()
    if t == "bessel":
        return bessel_kernel(block["s"])
    if t == "discrete-sine":
        return discrete_sine_kernel(block["theta"])
    if t == "gaussian":
        return gaussian_rank_one(block.get("center", 0.0), block.get("width", 1.0))
    if t == "sine-column":
        return sine_column_rank_one(block["q"], block.get("a", 1.0))
    raise ConfigError(f"unknown kernel type {t!r}")


def make_grid(block: dict) -> Grid:
    return build_grid(tuple(block["domain"]), block["n"], block.get("rule", "gauss-legendre"))
