"""Run configuration: JSON schema, validation and a deterministic JSON writer."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import jsonschema
import numpy as np

from .errors import ConfigInvalid

SUBCOMMANDS = ("solve", "simulate", "couple", "verify-matrix", "verify-lemma", "expansion",
               "holder", "certify")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int_pos = {"type": "integer", "minimum": 1}
_point = {"type": "array", "items": _num, "minItems": 1}
_exponent_game = {"oneOf": [{"type": "number", "minimum": 2}, {"const": "inf"}]}
_exponent_gt1 = {"oneOf": [{"type": "number", "exclusiveMinimum": 1}, {"const": "inf"}]}
_seed = {"type": "integer", "minimum": 0, "maximum": 2**64 - 1}

_domain = {
    "type": "object",
    "required": ["shape", "n", "epsilon", "spacing"],
    "properties": {
        "shape": {"enum": ["ball", "box"]},
        "radius": _pos, "halfwidth": _pos, "n": _int_pos,
        "epsilon": _pos, "spacing": _pos, "center": _point,
    },
    "oneOf": [{"required": ["radius"]}, {"required": ["halfwidth"]}],
    "additionalProperties": False,
}
_payoff = {
    "type": "object", "required": ["name"],
    "properties": {"name": {"enum": ["coordinate", "quadratic", "radial_pharmonic", "step",
                                     "saddle", "custom_table"]}},
}
_region = {"type": "object", "required": ["radius"],
           "properties": {"radius": _pos, "center": _point}, "additionalProperties": False}
_solver = {
    "tol": _pos, "max_iter": _int_pos, "method": {"enum": ["jacobi", "policy"]},
    "damping": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
}

SCHEMAS: dict[str, dict] = {
    "solve": {"required": ["domain", "p", "payoff"],
              "properties": {"domain": _domain, "p": _exponent_game, "payoff": _payoff, **_solver}},
    "simulate": {"required": ["domain", "p", "payoff", "x0"],
                 "properties": {"domain": _domain, "p": _exponent_game, "payoff": _payoff,
                                "x0": _point, "n_samples": _int_pos, "seed": _seed,
                                "step_cap": _int_pos, **_solver}},
    "couple": {"required": ["n", "p", "epsilon", "x0", "y0"],
               "properties": {"n": _int_pos, "p": _exponent_game, "epsilon": _pos,
                              "x0": _point, "y0": _point,
                              "coupling": {"type": "object", "required": ["kind"],
                                           "properties": {"kind": {"enum": ["reflection", "identity",
                                                                            "orthogonal"]},
                                                          "Q": {"type": "array"}}},
                              "payoff_cap": _num, "n_samples": _int_pos, "seed": _seed,
                              "diag_tol": _pos, "radius": _pos, "step_cap": _int_pos}},
    "verify-matrix": {"required": ["n", "p"],
                      "properties": {"n": _int_pos, "p": _exponent_gt1, "C": _pos,
                                     "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                                     "draws": _int_pos, "seed": _seed}},
    "verify-lemma": {"required": ["x0", "y0", "C", "delta"],
                     "properties": {"x0": _point, "y0": _point, "C": _pos,
                                    "delta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                                    "eps_fractions": {"type": "array", "items": _pos, "minItems": 1},
                                    "m": _int_pos, "ratio_band": {"type": "array", "items": _num,
                                                                  "minItems": 2, "maxItems": 2}}},
    "expansion": {"required": ["function", "x", "p", "eps_list"],
                  "properties": {"function": _payoff, "x": _point, "p": _exponent_game,
                                 "eps_list": {"type": "array", "items": _pos, "minItems": 1},
                                 "m": _int_pos, "min_decay": _pos}},
    "holder": {"required": ["domain", "p", "payoff", "delta", "region"],
               "properties": {"domain": _domain, "p": _exponent_game, "payoff": _payoff,
                              "delta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                              "region": _region, "pair_budget": _int_pos, "seed": _seed,
                              "calibrate": {"type": "boolean"}, **_solver}},
    "certify": {"required": ["n", "p", "C", "delta"],
                "properties": {"n": _int_pos, "p": _exponent_gt1, "C": _pos,
                               "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                               "x0": _point, "y0": _point, "z0": _point}},
}
for _s in SCHEMAS.values():
    _s["type"] = "object"


@dataclass
class RunConfig:
    """A subcommand plus its parameters; a run is a pure function of this."""

    subcommand: str
    params: dict[str, Any] = field(default_factory=dict)
    seed: int | None = None
    threads: int = 1
    out: str | None = None
    format: str = "json"

    def validate(self) -> RunConfig:
        if self.subcommand not in SCHEMAS:
            raise ConfigInvalid(f"unknown subcommand {self.subcommand!r}")
        try:
            jsonschema.validate(self.params, SCHEMAS[self.subcommand])
        except jsonschema.ValidationError as exc:
            path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigInvalid(f"{path}: {exc.message}") from None
        if self.format not in ("json", "csv"):
            raise ConfigInvalid(f"unknown format {self.format!r}")
        if self.threads < 1:
            raise ConfigInvalid("threads must be >= 1")
        return self

    def get(self, key: str, default=None):
        return self.params.get(key, default)

    def to_dict(self) -> dict:
        return {"subcommand": self.subcommand, "params": self.params, "seed": self.seed}


def parse_exponent(p) -> float:
    return math.inf if p == "inf" else float(p)


def load_params(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigInvalid("config must be a JSON object")
    return data


# ---------------------------------------------------------------------------
# output


def fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _plain(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    return o


def dumps(obj, indent: int = 2) -> str:
    """JSON with every float written to 17 significant digits."""
    def enc(o, level):
        o = _plain(o)
        pad, inner = " " * (indent * level), " " * (indent * (level + 1))
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, int):
            return str(o)
        if isinstance(o, float):
            return fmt_float(o)
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{inner}{json.dumps(str(k))}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + pad + "}"
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            if all(not isinstance(_plain(v), (dict, list, tuple)) for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            return "[\n" + ",\n".join(inner + enc(v, level + 1) for v in o) + "\n" + pad + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")
    return enc(obj, 0) + "\n"


def to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0].keys())
    for r in rows[1:]:
        cols += [k for k in r if k not in cols]

    def cell(v):
        v = _plain(v)
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return fmt_float(v)
        if v is None:
            return ""
        if isinstance(v, (list, tuple)):
            return " ".join(cell(x) for x in v)
        s = str(v)
        return f'"{s}"' if "," in s else s

    lines = [",".join(cols)] + [",".join(cell(r.get(c)) for c in cols) for r in rows]
    return "\n".join(lines) + "\n"
