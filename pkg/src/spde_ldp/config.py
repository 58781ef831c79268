"""Run configuration: parse, validate, freeze, hash.

A config is a YAML mapping with four blocks::

    model:       n, delta | q, nonlinearity
    integrator:  tau, eps, seed, T, stride, substeps, enforce_stability, y0
    study:       one optional sub-block per command (simulate, rate, ...)
    output:      dir, formats, threads

Every field has a default, unknown keys are rejected, and each diagnostic
names the offending field path (``model.nonlinearity.scale``).  The
canonical hash covers everything that influences results; the output
directory and the thread count are excluded since they never change the
numbers written.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import os
from types import MappingProxyType

import numpy as np
import yaml

from .errors import ConfigError
from .model import ModelSpec
from .nonlinearity import LinearDiagonal, Zero, named_nemytskij
from .paths import Control
from .spectral import OperatorSpec

__all__ = [
    "ENV_OUT",
    "ENV_THREADS",
    "RunConfig",
    "build_control",
    "build_model",
    "build_state",
    "load_config",
    "parse_config",
]

ENV_OUT = "SPDE_LDP_OUT"
ENV_THREADS = "SPDE_LDP_THREADS"

FORMATS = ("csv", "json", "txt", "png")
NEMYTSKIJ = ("sin", "tanh", "gauss_bump")

# A schema entry is (kind, default).  Kinds: "int", "pos_int", "float",
# "pos_float", "nonneg_float", "bool", "str", "float_list", "pos_float_list",
# "pos_int_list", "state", "opt_pos_float", a tuple of allowed strings, or a
# nested dict.
_NONLINEARITY = {
    "kind": (("zero", "linear", "nemytskij"), "zero"),
    "b": ("float_list", None),
    "name": (NEMYTSKIJ, "sin"),
    "scale": ("float", 1.0),
    "collocation": ("opt_pos_int", None),
}

SCHEMA = {
    "model": {
        "n": ("pos_int", 4),
        "delta": ("opt_float", 2.0),
        "q": ("pos_float_list", None),
        "nonlinearity": _NONLINEARITY,
    },
    "integrator": {
        "tau": ("pos_float", 0.05),
        "eps": ("nonneg_float", 0.0),
        "seed": ("seed", 0),
        "T": ("pos_float", 1.0),
        "stride": ("pos_int", 1),
        "substeps": ("pos_int", 1),
        "enforce_stability": ("bool", True),
        "y0": ("state", "parabola"),
    },
    "study": {
        "simulate": {
            "paths": ("pos_int", 1),
        },
        "rate": {
            "tau": ("opt_pos_float", None),
            "y0": ("opt_state", None),
        },
        "quasipotential": {
            "target": ("state", [0.1]),
            "horizons": ("pos_float_list", [0.25, 0.5, 1.0, 2.0, 4.0]),
            "points": ("pos_int", 400),
            "h": ("opt_pos_float", None),
            "tau": ("opt_pos_float", None),
            "tol": ("pos_float", 1e-8),
            "ftol": ("pos_float", 1e-13),
            "max_iter": ("pos_int", 20000),
            "restarts": ("int", 3),
        },
        "mc_verify": {
            "control": ("state", [0.0]),
            "h": ("pos_float", 0.01),
            "delta": ("pos_float", 0.3),
            "deltas": ("pos_float_list", None),
            "eps": ("pos_float_list", [0.4, 0.3, 0.2, 0.15]),
            "samples": ("pos_int", 10000),
            "tau": ("opt_pos_float", None),
            "correct_grid": ("bool", True),
        },
        "tail_check": {
            "burn_in": ("opt_nonneg_float", None),
            "window": ("pos_float", 100.0),
            "thin": ("opt_pos_float", None),
            "chains": ("pos_int", 1),
            "K": ("nonneg_float_list", [0.5, 1.0, 2.0, 3.0]),
            "alphas": ("pos_float_list", []),
            "kappa_fraction": ("nonneg_float", 0.5),
            "fernique_t": ("pos_float", 2.0),
            "fernique_samples": ("pos_int", 100000),
        },
        "preserve": {
            "kind": (("spatial", "temporal", "quasipotential"), "spatial"),
            "n_ladder": ("pos_int_list", [4, 8, 16, 32]),
            "tau_ladder": ("pos_float_list", [0.1, 0.05, 0.025, 0.0125]),
            "h": ("pos_float", 0.00125),
            "control": ("state", {"kind": "power", "power": 3.0}),
            "target": ("state", {"kind": "power", "power": 3.0}),
            "minimize": ("bool", True),
            "horizons": ("pos_float_list", [0.5, 1.0, 2.0]),
            "points": ("pos_int", 400),
            "skeleton_substeps": ("pos_int", 16),
        },
    },
    "output": {
        "dir": ("str", "out"),
        "formats": ("formats", list(FORMATS)),
        "threads": ("pos_int", 1),
    },
}

UNHASHED = (("output", "dir"), ("output", "threads"))


def _fail(path, msg):
    raise ConfigError(f"{path}: {msg}")


def _number(path, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(path, f"expected a number, got {type(v).__name__} {v!r}")
    v = float(v)
    if not math.isfinite(v):
        _fail(path, f"must be finite, got {v!r}")
    return v


def _integer(path, v):
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(path, f"expected an integer, got {v!r}")
    return int(v)


def _list(path, v, item):
    if not isinstance(v, list):
        _fail(path, f"expected a list, got {v!r}")
    return [item(f"{path}[{j}]", x) for j, x in enumerate(v)]


def _positive(f):
    def check(path, v):
        v = f(path, v)
        if not v > 0:
            _fail(path, f"must be > 0, got {v!r}")
        return v
    return check


def _nonneg(f):
    def check(path, v):
        v = f(path, v)
        if v < 0:
            _fail(path, f"must be >= 0, got {v!r}")
        return v
    return check


def _optional(f):
    def check(path, v):
        return None if v is None else f(path, v)
    return check


def _seed(path, v):
    v = _integer(path, v)
    if not 0 <= v < 2**64:
        _fail(path, f"seed must lie in [0, 2^64), got {v}")
    return v


def _state(path, v):
    """A state: explicit coefficient list, a named profile, or a mapping."""
    if isinstance(v, list):
        return _list(path, v, _number)
    if v in ("parabola", "zero"):
        return v
    if isinstance(v, dict):
        kinds = ("parabola", "zero", "power", "mode")
        kind = v.get("kind")
        if kind not in kinds:
            _fail(f"{path}.kind", f"expected one of {kinds}, got {kind!r}")
        allowed = {"kind", "power", "modes", "scale", "index", "value"}
        for k in v:
            if k not in allowed:
                _fail(f"{path}.{k}", "unknown key")
        out = {"kind": kind}
        if "power" in v:
            out["power"] = _number(f"{path}.power", v["power"])
        if "modes" in v:
            out["modes"] = _positive(_integer)(f"{path}.modes", v["modes"])
        if "scale" in v:
            out["scale"] = _number(f"{path}.scale", v["scale"])
        if "index" in v:
            out["index"] = _positive(_integer)(f"{path}.index", v["index"])
        if "value" in v:
            out["value"] = _number(f"{path}.value", v["value"])
        return out
    _fail(path, f"expected a coefficient list, 'parabola', 'zero' or a mapping, got {v!r}")


def _formats(path, v):
    v = _list(path, v, lambda p, x: x)
    for j, x in enumerate(v):
        if x not in FORMATS:
            _fail(f"{path}[{j}]", f"expected one of {FORMATS}, got {x!r}")
    return v


def _choice(options):
    def check(path, v):
        if v not in options:
            _fail(path, f"expected one of {options}, got {v!r}")
        return v
    return check


def _string(path, v):
    if not isinstance(v, str) or not v:
        _fail(path, f"expected a nonempty string, got {v!r}")
    return v


def _boolean(path, v):
    if not isinstance(v, bool):
        _fail(path, f"expected true or false, got {v!r}")
    return v


CHECKS = {
    "int": _integer,
    "pos_int": _positive(_integer),
    "opt_pos_int": _optional(_positive(_integer)),
    "float": _number,
    "opt_float": _optional(_number),
    "pos_float": _positive(_number),
    "opt_pos_float": _optional(_positive(_number)),
    "nonneg_float": _nonneg(_number),
    "opt_nonneg_float": _optional(_nonneg(_number)),
    "bool": _boolean,
    "str": _string,
    "seed": _seed,
    "state": _state,
    "opt_state": _optional(_state),
    "formats": _formats,
    "float_list": _optional(lambda p, v: _list(p, v, _number)),
    "pos_float_list": _optional(lambda p, v: _list(p, v, _positive(_number))),
    "nonneg_float_list": lambda p, v: _list(p, v, _nonneg(_number)),
    "pos_int_list": lambda p, v: _list(p, v, _positive(_integer)),
}


def _validate(schema, data, path):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        _fail(path or "<root>", f"expected a mapping, got {data!r}")
    for k in data:
        if k not in schema:
            _fail(f"{path}.{k}" if path else str(k), "unknown key")
    out = {}
    for key, spec in schema.items():
        sub = f"{path}.{key}" if path else key
        if isinstance(spec, dict):
            out[key] = _validate(spec, data.get(key), sub)
            continue
        kind, default = spec
        if key not in data:
            out[key] = copy.deepcopy(default)
            continue
        check = _choice(kind) if isinstance(kind, tuple) else CHECKS[kind]
        out[key] = check(sub, data[key])
    return out


def _cross_checks(cfg):
    m = cfg["model"]
    if m["q"] is not None:
        if len(m["q"]) != m["n"]:
            _fail("model.q", f"has {len(m['q'])} entries but model.n = {m['n']}")
    elif m["delta"] is None:
        _fail("model.delta", "give either delta or an explicit q list")
    nl = m["nonlinearity"]
    if nl["kind"] == "linear":
        if nl["b"] is None:
            _fail("model.nonlinearity.b", "required for kind 'linear'")
        if len(nl["b"]) != m["n"]:
            _fail("model.nonlinearity.b", f"has {len(nl['b'])} entries but model.n = {m['n']}")
    qp = cfg["study"]["quasipotential"]
    if any(b <= a for a, b in zip(qp["horizons"], qp["horizons"][1:])):
        _fail("study.quasipotential.horizons", "must be strictly increasing")
    mc = cfg["study"]["mc_verify"]
    if any(b >= a for a, b in zip(mc["eps"], mc["eps"][1:])):
        _fail("study.mc_verify.eps", "must be strictly decreasing")
    pr = cfg["study"]["preserve"]
    if any(b <= a for a, b in zip(pr["n_ladder"], pr["n_ladder"][1:])):
        _fail("study.preserve.n_ladder", "must be strictly increasing")
    if any(b >= a for a, b in zip(pr["tau_ladder"], pr["tau_ladder"][1:])):
        _fail("study.preserve.tau_ladder", "must be strictly decreasing")


def _freeze(obj):
    if isinstance(obj, dict):
        return MappingProxyType({k: _freeze(v) for k, v in obj.items()})
    if isinstance(obj, list):
        return tuple(_freeze(v) for v in obj)
    return obj


def _thaw(obj):
    if isinstance(obj, (dict, MappingProxyType)):
        return {k: _thaw(v) for k, v in obj.items()}
    if isinstance(obj, tuple):
        return [_thaw(v) for v in obj]
    return obj


class RunConfig:
    """Validated, read-only configuration with a canonical hash."""

    def __init__(self, data):
        self._data = _freeze(data)
        hashed = _thaw(self._data)
        for block, key in UNHASHED:
            hashed[block].pop(key, None)
        blob = json.dumps(hashed, sort_keys=True, separators=(",", ":"), allow_nan=False)
        self.hash = hashlib.sha256(blob.encode()).hexdigest()

    def __getitem__(self, key):
        return self._data[key]

    @property
    def model(self):
        return self._data["model"]

    @property
    def integrator(self):
        return self._data["integrator"]

    @property
    def study(self):
        return self._data["study"]

    @property
    def output(self):
        return self._data["output"]

    @property
    def seed(self):
        return self._data["integrator"]["seed"]

    def to_dict(self):
        return _thaw(self._data)

    def with_overrides(self, seed=None, out=None, threads=None):
        """New config with command-line or environment overrides applied."""
        data = self.to_dict()
        if seed is not None:
            data["integrator"]["seed"] = _seed("--seed", seed)
        if out is not None:
            data["output"]["dir"] = _string("--out", out)
        if threads is not None:
            data["output"]["threads"] = _positive(_integer)("--threads", threads)
        return RunConfig(data)


def parse_config(data):
    """Validate a raw mapping and return a frozen :class:`RunConfig`."""
    cfg = _validate(SCHEMA, data, "")
    _cross_checks(cfg)
    return RunConfig(cfg)


def load_config(path=None, env=None):
    """Read YAML from ``path`` (None: all defaults) and apply environment overrides."""
    env = os.environ if env is None else env
    raw = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    cfg = parse_config(raw)
    threads = env.get(ENV_THREADS)
    if threads is not None:
        try:
            threads = int(threads)
        except ValueError:
            raise ConfigError(f"{ENV_THREADS}: expected an integer, got {threads!r}") from None
    return cfg.with_overrides(out=env.get(ENV_OUT) or None, threads=threads)


def build_state(spec, n, path="state"):
    """Coefficient vector of length n from a state spec."""
    if isinstance(spec, (list, tuple)):
        v = np.zeros(n)
        vals = np.asarray(spec, dtype=float)
        if vals.size > n:
            _fail(path, f"has {vals.size} coefficients but the model has only {n} modes")
        v[: vals.size] = vals
        return v
    spec = {"kind": spec} if isinstance(spec, str) else dict(spec)
    kind = spec["kind"]
    scale = spec.get("scale", 1.0)
    i = np.arange(1, n + 1, dtype=float)
    if kind == "zero":
        return np.zeros(n)
    if kind == "parabola":
        return scale * np.where(i % 2 == 1, 4.0 * math.sqrt(2.0) / (i * math.pi) ** 3, 0.0)
    if kind == "power":
        modes = min(spec.get("modes", n), n)
        v = np.zeros(n)
        v[:modes] = scale * i[:modes] ** (-spec.get("power", 3.0))
        return v
    index = spec.get("index", 1)
    if index > n:
        _fail(f"{path}.index", f"mode {index} exceeds model.n = {n}")
    v = np.zeros(n)
    v[index - 1] = spec.get("value", 1.0)
    return v


def build_model(cfg, n=None):
    """ModelSpec from the model block (optionally at another dimension)."""
    m = cfg.model
    n = m["n"] if n is None else n
    with np.errstate(all="raise"):
        if m["q"] is not None:
            q = np.asarray(m["q"], dtype=float)
            if n > q.size:
                _fail("model.q", f"has {q.size} entries, {n} needed")
            op = OperatorSpec(q[:n])
        else:
            op = OperatorSpec.from_decay(n, m["delta"])
    nl = m["nonlinearity"]
    if nl["kind"] == "zero":
        F = Zero()
    elif nl["kind"] == "linear":
        b = np.asarray(nl["b"], dtype=float)
        F = LinearDiagonal(b[:n] if n <= b.size else np.pad(b, (0, n - b.size)))
    else:
        F = named_nemytskij(nl["name"], nl["scale"], nl["collocation"])
    return ModelSpec(op, F)


def build_control(coeffs, T, h):
    """Time-constant control from a coefficient vector."""
    return Control.constant(np.asarray(coeffs, dtype=float), T, h)
