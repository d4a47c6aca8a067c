"""Config schema, run manifests and report emission."""
from dataclasses import dataclass, field, asdict
import datetime as _dt
import hashlib
import json
import math
import os

import numpy as np
from jsonschema import Draft202012Validator

from . import __version__

_NUMS = {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1}
_TAGGED = {
    "type": "object",
    "properties": {"kind": {"type": "string"}, "params": {"type": "object"}},
    "required": ["kind"],
    "additionalProperties": False,
}

EXPERIMENT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "model": _TAGGED,
        "subordinator": _TAGGED,
        "level": {"type": "number"},
        "windows": {
            "type": "array", "minItems": 1,
            "items": {"type": "object",
                      "properties": {"extents": _NUMS, "mesh": _NUMS},
                      "required": ["extents"], "additionalProperties": False},
        },
        "replicates": {"type": "integer", "minimum": 100},
        "seed": {"type": "integer", "minimum": 0},
        "normalization": {"enum": ["quadrature", "closed_form_fgn", "asymptotic_example27"]},
        "rank": {"type": "integer", "minimum": 1, "maximum": 3},
    },
    "required": ["model", "subordinator", "level", "windows", "replicates"],
    "additionalProperties": False,
}

CHECK_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "condition": {"enum": ["delta_ratio", "condcor2", "spatiotemporal", "lrd_classify"]},
        "model": _TAGGED,
        "probes": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "delta": {"type": "number"},
    },
    "required": ["condition", "model"],
    "additionalProperties": False,
}


class ConfigError(ValueError):
    def __init__(self, problems):
        super().__init__("; ".join(problems))
        self.problems = problems


def validate(obj, schema=EXPERIMENT_SCHEMA):
    errs = sorted(Draft202012Validator(schema).iter_errors(obj), key=lambda e: list(e.path))
    if errs:
        raise ConfigError([f"{'/'.join(map(str, e.path)) or '<root>'}: {e.message}" for e in errs])
    return obj


def load_config(path, schema=EXPERIMENT_SCHEMA):
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"invalid JSON: {exc}"]) from None
    return validate(obj, schema)


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(obj):
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    config_hash: str
    version: str
    seed: int
    started: str
    finished: str = None
    outputs: dict = field(default_factory=dict)

    @classmethod
    def start(cls, config, seed):
        return cls(config_hash(config), __version__, int(seed), _now())

    def finish(self, outputs):
        self.outputs = dict(outputs)
        self.finished = _now()
        return self

    def write(self, path):
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=1, sort_keys=True)
        return path


def jsonable(obj):
    """Plain JSON types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_text(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def plot_standardized(values, path, title=""):
    """Histogram with N(0,1) overlay and a normal QQ plot, saved as SVG."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from scipy.stats import norm

    x = np.sort(np.asarray(values, dtype=float))
    plt.rcParams["svg.hashsalt"] = "excursionlab"
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.hist(x, bins=40, density=True, color="0.75", edgecolor="0.4")
    grid = np.linspace(min(x.min(), -4), max(x.max(), 4), 400)
    ax1.plot(grid, norm.pdf(grid), "k-", lw=1.2, label="N(0,1)")
    ax1.legend()
    ax1.set_title(title or "standardized statistic")
    q = norm.ppf((np.arange(1, len(x) + 1) - 0.5) / len(x))
    ax2.plot(q, x, ".", ms=2)
    ax2.plot(q, q, "k--", lw=1)
    ax2.set_xlabel("normal quantile")
    ax2.set_ylabel("sample quantile")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _obj(props, required):
    return {"$schema": "https://json-schema.org/draft/2020-12/schema", "type": "object",
            "properties": props, "required": required, "additionalProperties": False}


_WINDOW = EXPERIMENT_SCHEMA["properties"]["windows"]["items"]

SIGMA_SCHEMA = _obj({
    "model": _TAGGED,
    "windows": EXPERIMENT_SCHEMA["properties"]["windows"],
    "m": {"type": "integer", "minimum": 1},
    "method": {"enum": ["quadrature", "closed_form_fgn", "asymptotic_example27"]},
}, ["model", "windows"])

FGN_SCHEMA = _obj({
    "H": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
          "minItems": 1},
    "gamma": {"oneOf": [{"const": "auto"}, _NUMS]},
    "level": {"type": "number"},
    "replicates": {"type": "integer", "minimum": 100},
    "ladder": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 1}, "minItems": 2},
    "seed": {"type": "integer", "minimum": 0},
    "max_nodes": {"type": "integer", "minimum": 16},
}, ["H", "replicates", "ladder"])

ROSENBLATT_SCHEMA = _obj({
    "m": {"enum": [2, 3]},
    "density": _TAGGED,
    "window": {"enum": ["box", "ball"]},
    "draws": {"type": "integer", "minimum": 1},
    "seed": {"type": "integer", "minimum": 0},
    "per_decade": {"type": "integer", "minimum": 2},
    "y_min": {"type": "number", "exclusiveMinimum": 0},
    "y_max": {"type": "number", "exclusiveMinimum": 0},
}, ["m", "density"])

VOLATILITY_SCHEMA = _obj({
    "model": _TAGGED,
    "level": {"type": "number"},
    "replicates": {"type": "integer", "minimum": 50},
    "window": _WINDOW,
    "seed": {"type": "integer", "minimum": 0},
    "xi": {"type": "object",
           "properties": {"kind": {"enum": ["constant", "levy_sqrt"]},
                          "c": {"type": "number", "exclusiveMinimum": 0},
                          "u": {"type": "number", "exclusiveMinimum": 0}},
           "required": ["kind"], "additionalProperties": False},
}, ["model", "level", "replicates", "window"])
