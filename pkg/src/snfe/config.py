"""Run configuration: YAML schema, named presets and flag overrides.

A config file is a nested mapping with the sections ``model``, ``noise``,
``time``, ``initial``, ``ensemble``, ``solver``, ``stationary`` and
``output``. Missing keys take the values of the chosen preset (or the
built-in defaults); unknown keys are rejected. ``model.v`` accepts ``.inf``.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from snfe.errors import ConfigError
from snfe.model import (
    FiringRateSpec,
    InputSpec,
    KernelSpec,
    ModelSpec,
    PAPER_PRESET,
    build_grid,
)
from snfe.noise import LAMBDA_SCALES, NoiseSpec
from snfe.solver import HISTORY_KINDS, InitialHistory, TimeGridSpec

DEFAULT_SEED = 20240611

# section -> key -> coercion
_float = float


def _int(v):
    if isinstance(v, bool) or int(v) != v:
        raise ValueError("expected an integer")
    return int(v)


def _seed(v):
    if isinstance(v, bool) or int(v) != v or not 0 <= int(v) < 2**64:
        raise ValueError("expected a 64-bit unsigned integer")
    return int(v)


def _str(v):
    if not isinstance(v, str):
        raise ValueError("expected a string")
    return v


def _float_list(v):
    if not isinstance(v, (list, tuple)):
        raise ValueError("expected a list of numbers")
    return [float(x) for x in v]


def _opt_str(v):
    return None if v is None else _str(v)


_INITIAL_KEYS = {"kind": _str, "value": _float, "path": _opt_str, "half_width": _float, "height": _float}

SCHEMA: dict[str, Any] = {
    "model": {
        "l": _float,
        "N": _int,
        "alpha": _float,
        "v": _float,
        "kernel": {"variant": _str, "a": _float, "b": _float, "c": _float, "omega": _float, "s": _float},
        "firing": {"variant": _str, "theta": _float, "beta": _float, "at_threshold": _float},
        "input": {"variant": _str, "offset": _float, "amplitude": _float, "width": _float},
    },
    "noise": {"epsilon": _float, "xi": _float, "master_seed": _seed, "lambda_scale": _str},
    "time": {"h_t": _float, "n": _int},
    "initial": _INITIAL_KEYS,
    "ensemble": {"n_paths": _int, "workers": _int, "record_times": _float_list, "hist_bin_width": _float},
    "solver": {"nonlinear": _str},
    "stationary": {
        "tolerance": _float,
        "max_steps": _int,
        "seeds": {"one": _INITIAL_KEYS, "three": _INITIAL_KEYS, "five": _INITIAL_KEYS},
    },
    "output": {"out_dir": _str},
}

_BASE: dict[str, Any] = {
    "model": {
        "l": 50.0,
        "N": 100,
        "alpha": 1.0,
        "v": math.inf,
        "kernel": {"variant": "paper-oscillatory", "a": 2.0, "b": 0.08, "c": 0.08, "omega": math.pi / 10},
        "firing": {"variant": "heaviside", "theta": 0.0, "beta": 1.0, "at_threshold": 0.0},
        "input": {"variant": "paper-gaussian-offset", "offset": -3.39967, "amplitude": 8.0, "width": 18.0},
    },
    "noise": {"epsilon": 0.0, "xi": 1.0, "master_seed": DEFAULT_SEED, "lambda_scale": "mode-index"},
    "time": {"h_t": 0.02, "n": 200},
    "initial": {"kind": "zero"},
    "ensemble": {"n_paths": 100, "workers": 0, "record_times": [], "hist_bin_width": 0.4},
    "solver": {"nonlinear": "fft"},
    "stationary": {
        "tolerance": 1e-6,
        "max_steps": 20000,
        "seeds": {
            "one": {"kind": "zero"},
            "three": {"kind": "rectangle", "half_width": 29.0, "height": 10.0},
            "five": {"kind": "rectangle", "half_width": 23.0, "height": 10.0},
        },
    },
    "output": {"out_dir": "out"},
}

PRESETS = {PAPER_PRESET: _BASE}


def preset(name: str) -> dict:
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ConfigError("preset", f"unknown preset {name!r}; available: {sorted(PRESETS)}") from None


@dataclass
class RunConfig:
    model: ModelSpec
    noise: NoiseSpec
    time: TimeGridSpec
    initial: InitialHistory
    n_paths: int = 100
    workers: int = 0
    record_times: list = field(default_factory=list)
    hist_bin_width: float = 0.4
    nonlinear: str = "fft"
    stationary_tolerance: float = 1e-6
    stationary_max_steps: int = 20000
    stationary_seeds: dict = field(default_factory=dict)
    out_dir: str = "out"

    def to_dict(self) -> dict:
        m = self.model
        return {
            "model": {
                "l": m.grid.l,
                "N": m.grid.N,
                "alpha": m.alpha,
                "v": m.v,
                "kernel": {"variant": m.kernel.variant, **m.kernel.params},
                "firing": {
                    "variant": m.firing.variant,
                    "theta": m.firing.theta,
                    "beta": m.firing.beta,
                    "at_threshold": m.firing.at_threshold,
                },
                "input": {
                    "variant": m.input.variant,
                    "offset": m.input.offset,
                    "amplitude": m.input.amplitude,
                    "width": m.input.width,
                },
            },
            "noise": {
                "epsilon": self.noise.epsilon,
                "xi": self.noise.xi,
                "master_seed": self.noise.master_seed,
                "lambda_scale": self.noise.lambda_scale,
            },
            "time": {"h_t": self.time.h_t, "n": self.time.n},
            "initial": _initial_to_dict(self.initial),
            "ensemble": {
                "n_paths": self.n_paths,
                "workers": self.workers,
                "record_times": list(self.record_times),
                "hist_bin_width": self.hist_bin_width,
            },
            "solver": {"nonlinear": self.nonlinear},
            "stationary": {
                "tolerance": self.stationary_tolerance,
                "max_steps": self.stationary_max_steps,
                "seeds": {k: _initial_to_dict(v) for k, v in self.stationary_seeds.items()},
            },
            "output": {"out_dir": self.out_dir},
        }

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def write(self, path) -> None:
        Path(path).write_text(self.dump())


def _initial_to_dict(ini: InitialHistory) -> dict:
    out = {"kind": ini.kind}
    if ini.kind == "constant":
        out["value"] = ini.value
    elif ini.kind == "snapshot":
        out["path"] = ini.path
    elif ini.kind == "rectangle":
        out.update(half_width=ini.half_width, height=ini.height)
    elif ini.kind in ("field", "function"):
        raise ConfigError("initial.kind", f"{ini.kind!r} histories are not serializable")
    return out


def _validate(data, schema, prefix="") -> dict:
    if not isinstance(data, dict):
        raise ConfigError(prefix.rstrip(".") or "<root>", "expected a mapping")
    out = {}
    for key, val in data.items():
        path = f"{prefix}{key}"
        if key not in schema:
            raise ConfigError(path, "unknown key")
        sub = schema[key]
        if isinstance(sub, dict):
            out[key] = _validate(val, sub, path + ".")
        else:
            try:
                out[key] = sub(val)
            except (TypeError, ValueError) as exc:
                raise ConfigError(path, f"invalid value {val!r}: {exc}") from None
    return out


_REPLACED = ("initial", "one", "three", "five")


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        # history specs are replaced wholesale so stale keys of another kind don't linger
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in _REPLACED:
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _build_initial(d: dict, key: str) -> InitialHistory:
    kind = d.get("kind", "zero")
    if kind not in HISTORY_KINDS or kind in ("field", "function"):
        raise ConfigError(f"{key}.kind", f"must be one of zero, constant, snapshot, rectangle; got {kind!r}")
    if kind == "snapshot" and not d.get("path"):
        raise ConfigError(f"{key}.path", "snapshot history needs a path")
    return InitialHistory(
        kind=kind,
        value=d.get("value", 0.0),
        path=d.get("path"),
        half_width=d.get("half_width", 0.0),
        height=d.get("height", 0.0),
    )


def from_dict(data: dict) -> RunConfig:
    """Validate a complete (already merged) config mapping."""
    d = _validate(data, SCHEMA)
    for section in SCHEMA:
        if section not in d:
            raise ConfigError(section, "missing section")
    m = d["model"]
    kern = dict(m["kernel"])
    variant = kern.pop("variant", "paper-oscillatory")
    if variant not in ("paper-oscillatory", "gaussian"):
        raise ConfigError("model.kernel.variant", f"must be paper-oscillatory or gaussian, got {variant!r}")
    if variant == "gaussian":
        kern = {k: v for k, v in kern.items() if k in ("a", "s")}
    else:
        kern = {k: v for k, v in kern.items() if k in ("a", "b", "c", "omega")}
    f = m["firing"]
    if f.get("variant") not in ("heaviside", "sigmoid", "linear"):
        raise ConfigError("model.firing.variant", f"must be heaviside, sigmoid or linear, got {f.get('variant')!r}")
    inp = m["input"]
    if inp.get("variant") not in ("paper-gaussian-offset", "zero", "constant"):
        raise ConfigError("model.input.variant", f"must be paper-gaussian-offset, zero or constant, got {inp.get('variant')!r}")
    model = ModelSpec(
        grid=build_grid(m["l"], m["N"]),
        kernel=KernelSpec(variant, kern),
        firing=FiringRateSpec(**f),
        input=InputSpec(**inp),
        alpha=m["alpha"],
        v=m["v"],
    )
    n = d["noise"]
    if n.get("lambda_scale", "mode-index") not in LAMBDA_SCALES:
        raise ConfigError("noise.lambda_scale", f"must be one of {LAMBDA_SCALES}")
    noise = NoiseSpec(**n)
    time = TimeGridSpec(**d["time"])
    e = d["ensemble"]
    if e["n_paths"] < 1:
        raise ConfigError("ensemble.n_paths", "must be >= 1")
    if e["workers"] < 0:
        raise ConfigError("ensemble.workers", "must be >= 0 (0 = all cores)")
    if not e["hist_bin_width"] > 0:
        raise ConfigError("ensemble.hist_bin_width", "must be > 0")
    if d["solver"]["nonlinear"] not in ("fft", "naive"):
        raise ConfigError("solver.nonlinear", "must be fft or naive")
    s = d["stationary"]
    if not s["tolerance"] > 0:
        raise ConfigError("stationary.tolerance", "must be > 0")
    if s["max_steps"] < 1:
        raise ConfigError("stationary.max_steps", "must be >= 1")
    return RunConfig(
        model=model,
        noise=noise,
        time=time,
        initial=_build_initial(d["initial"], "initial"),
        n_paths=e["n_paths"],
        workers=e["workers"],
        record_times=list(e["record_times"]),
        hist_bin_width=e["hist_bin_width"],
        nonlinear=d["solver"]["nonlinear"],
        stationary_tolerance=s["tolerance"],
        stationary_max_steps=s["max_steps"],
        stationary_seeds={k: _build_initial(v, f"stationary.seeds.{k}") for k, v in s["seeds"].items()},
        out_dir=d["output"]["out_dir"],
    )


def set_dotted(data: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = data
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def parse_config(path=None, preset_name: str | None = PAPER_PRESET, overrides: dict | None = None) -> RunConfig:
    """Preset, then config file, then dotted-key overrides, later winning."""
    data = preset(preset_name) if preset_name else copy.deepcopy(_BASE)
    if path is not None:
        try:
            loaded = yaml.safe_load(Path(path).read_text()) or {}
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError("--config", f"not valid YAML: {exc}") from exc
        data = _merge(data, _validate(loaded, SCHEMA))
    for dotted, value in (overrides or {}).items():
        set_dotted(data, dotted, value)
    return from_dict(data)


def loads(text: str) -> RunConfig:
    """Parse a complete config document (no preset merging)."""
    return from_dict(yaml.safe_load(text))
