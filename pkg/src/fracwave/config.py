"""Run configuration: a flat TOML file whose keys mirror the CLI flags.

Flags override file values; unknown keys are errors. Resolution applies the
defaults below and re-validates the model and grid.
"""

from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass, field as dc_field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, FracwaveError
from .functionals import ModelParams
from .grid import GridSpec

TASKS = ("groundstate", "evolve", "classify", "gamma-sweep", "instability", "validate")

# key -> (type, default). None default means "unset".
SCHEMA = {
    "task": (str, None),
    "s1": (float, None),
    "s2": (float, 0.0),
    "p": (float, None),
    "dim": (int, 1),
    "grid": (str, "1024,80"),
    "c": (float, None),
    "lambda": (float, None),
    "c_list": (list, None),
    "tau_list": (list, None),
    "T": (float, None),
    "dt": (float, 1e-3),
    "adapt": (bool, False),
    "dt_floor": (float, 1e-9),
    "blowup_factor": (float, 50.0),
    "monitor_every": (int, 10),
    "snapshot_every": (int, 0),
    "box": (str, "fixed"),
    "points_per_width": (float, 24.0),
    "lambda_min": (float, 1e-3),
    "lambda_max": (float, 1e3),
    "mass_tol": (float, 1e-6),
    "seed": (int, 0),
    "seed_width": (float, 1.0),
    "init": (str, None),
    "phi": (str, None),
    "init_amplitude": (float, None),
    "init_width": (float, 1.0),
    "cutoff_R": (float, None),
    "workers": (int, None),
    "out_dir": (str, "."),
    "out": (str, None),
    "field": (str, None),
    "snapshots": (str, None),
}

REQUIRED = {
    "groundstate": ("s1", "p"),
    "evolve": ("s1", "p", "T"),
    "classify": ("s1", "p", "init", "phi"),
    "gamma-sweep": ("s1", "s2", "p", "c_list"),
    "instability": ("s1", "s2", "p", "c", "tau_list", "T"),
    "validate": (),
}


@dataclass
class RunConfig:
    task: str
    model: ModelParams | None
    grid: GridSpec
    values: dict = dc_field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        v = self.values.get(key)
        return default if v is None else v

    def path(self, key, default=None):
        name = self.get(key, default)
        if name is None:
            return None
        return name if os.path.isabs(name) else os.path.join(self.values["out_dir"], name)

    def to_dict(self):
        out = dict(self.values)
        out["model"] = self.model.to_dict() if self.model else None
        out["grid_resolved"] = self.grid.to_dict()
        return out


def parse_grid(text):
    """'n,L' (or a two-item list) -> (n, L)."""
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = [t for t in str(text).replace("x", ",").split(",") if t.strip()]
    if len(parts) != 2:
        raise ConfigError(f"grid must be 'n,L', got {text!r}", key="grid")
    try:
        n = int(parts[0])
        L = float(parts[1])
    except (TypeError, ValueError):
        raise ConfigError(f"grid must be 'n,L', got {text!r}", key="grid") from None
    return n, L


def parse_list(value, key):
    if isinstance(value, str):
        value = [t for t in value.split(",") if t.strip()]
    try:
        out = [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a list of numbers, got {value!r}", key=key) from None
    if not out:
        raise ConfigError(f"{key} is empty", key=key)
    return out


def _coerce(key, value):
    typ = SCHEMA[key][0]
    if value is None:
        return None
    if key == "grid":
        if isinstance(value, (list, tuple)):
            return ",".join(str(v) for v in value)
        return str(value)
    if typ is list:
        return parse_list(value, key)
    if typ is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "1", "yes", "false", "0", "no"):
            return value.lower() in ("true", "1", "yes")
        raise ConfigError(f"{key} must be a boolean, got {value!r}", key=key)
    if typ is int:
        if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
            raise ConfigError(f"{key} must be an integer, got {value!r}", key=key)
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be an integer, got {value!r}", key=key) from None
    if typ is float:
        if isinstance(value, bool):
            raise ConfigError(f"{key} must be a number, got {value!r}", key=key)
        try:
            v = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be a number, got {value!r}", key=key) from None
        if not math.isfinite(v):
            raise ConfigError(f"{key} must be finite, got {value!r}", key=key)
        return v
    return str(value)


def load_file(path):
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}", key="config") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}", key="config") from None
    for key, value in raw.items():
        if isinstance(value, dict):
            raise ConfigError(f"{path}: nested table [{key}] not allowed (flat keys only)", key=key)
    return raw


def parse_config(path=None, overrides=None, task=None):
    """Merge file values and flag overrides into a RunConfig."""
    merged = {}
    if path is not None:
        merged.update(load_file(path))
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value
    if task is not None:
        merged["task"] = task
    unknown = sorted(set(merged) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}", key=unknown[0], unknown=unknown)
    values = {k: default for k, (_, default) in SCHEMA.items()}
    for key, value in merged.items():
        values[key] = _coerce(key, value)

    t = values["task"]
    if t not in TASKS:
        raise ConfigError(f"task must be one of {', '.join(TASKS)}, got {t!r}", key="task")
    missing = [k for k in REQUIRED[t] if values.get(k) is None]
    if missing:
        raise ConfigError(f"task {t} needs: {', '.join(missing)}", key=missing[0], missing=missing)
    if values["box"] not in ("fixed", "scaled"):
        raise ConfigError(f"box must be 'fixed' or 'scaled', got {values['box']!r}", key="box")
    if t == "groundstate" and values["c"] is not None and values["lambda"] is not None:
        raise ConfigError("give either c or lambda, not both", key="c")

    n, L = parse_grid(values["grid"])
    try:
        grid = GridSpec(values["dim"], n, L)
        model = None
        if values["s1"] is not None and values["p"] is not None:
            model = ModelParams(values["s1"], values["s2"], values["p"], values["dim"])
    except FracwaveError as exc:
        exc.details.setdefault("key", "grid" if "n_per_axis" in str(exc) or "box" in str(exc) else "model")
        raise
    out_dir = values["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise ConfigError(f"output directory not writable: {out_dir}", key="out_dir")
    return RunConfig(t, model, grid, values)
