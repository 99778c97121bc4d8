"""Experiment configuration: strict dataclasses loaded from JSON or TOML.

A config document is flat: the model's parameters at top level, noise laws
as ``{kind = ..., precision = ... | half_width = ...}`` tables and grid knobs
in a ``grid`` table. Common keys are ``model``, ``format``, ``out`` and
``workers``. Unknown keys are rejected with the dotted path of the key.

Precedence: explicit CLI flags, then the file, then the defaults below.
"""

from __future__ import annotations

import dataclasses
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

from .dist import ErrorDistribution
from .errors import ConfigError, DomainError
from .onesignal import OneSignalGrid
from .simlab import SimConfig
from .twosignal import TwoSignalGrid

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

COMMON_KEYS = ("model", "format", "out", "workers")
FORMATS = ("json", "csv")


def _normal(precision):
    return field(default_factory=lambda: ErrorDistribution.normal(precision))


@dataclass
class BenchmarkConfig:
    c: float = 0.5
    alpha_x: float = 1.0


@dataclass
class NetSignalConfig:
    alpha_z: float = 16.0
    z_star: float = 0.25
    theta: float = 0.25
    c: float = 0.5
    theta_range: str = "0:1:101"
    branch_switch: float = 0.5
    grid_bits: int = 12


@dataclass
class TwoSignalConfig:
    delta: float = 0.2
    gamma: float = 0.1
    xi: float = 1.0
    c: float = 0.5
    dist_x: ErrorDistribution = _normal(1.0)
    dist_y: ErrorDistribution = _normal(1e4)
    t: float = 0.5
    sigma: float = 0.4  # action-noise half-width for step equilibria
    max_iter: int = 200
    sup_tol: float = 1e-6
    consistency_tol: float = 1e-10
    eta_max: Optional[float] = None
    grid: TwoSignalGrid = field(default_factory=TwoSignalGrid)


@dataclass
class OneSignalConfig:
    delta: float = 0.2
    gamma: float = 0.1
    c: float = 0.5
    dist_rho: ErrorDistribution = _normal(1e4)
    t: float = 0.5
    max_iter: int = 200
    sup_tol: float = 1e-6
    xi_max: Optional[float] = None
    grid: OneSignalGrid = field(default_factory=OneSignalGrid)


MODEL_CONFIGS = {
    "benchmark": BenchmarkConfig,
    "netsignal": NetSignalConfig,
    "twosignal": TwoSignalConfig,
    "onesignal": OneSignalConfig,
    "simulate": SimConfig,
}


@dataclass
class ExperimentConfig:
    model: str
    params: object
    format: Optional[str] = None
    out: Optional[str] = None
    workers: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "format": self.format,
            "out": self.out,
            "workers": self.workers,
            "params": to_mapping(self.params),
        }


def read_config_file(path: str) -> dict:
    """Parse a JSON (``.json``) or TOML (anything else) document."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}", key=None) from exc
    try:
        if os.path.splitext(path)[1].lower() == ".json":
            data = json.loads(raw.decode("utf-8"))
        else:
            data = tomllib.loads(raw.decode("utf-8"))
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config document must be a mapping")
    return data


def _field_default(f):
    if f.default is not dataclasses.MISSING:
        return f.default
    if f.default_factory is not dataclasses.MISSING:
        return f.default_factory()
    return dataclasses.MISSING


def _coerce(value, default, key):
    if isinstance(default, ErrorDistribution):
        if isinstance(value, ErrorDistribution):
            return value
        try:
            return ErrorDistribution.from_config(value)
        except ConfigError as exc:
            raise ConfigError(f"{key}: {exc}", key=f"{key}.{exc.key}" if exc.key else key) from exc
    if dataclasses.is_dataclass(default):
        if dataclasses.is_dataclass(value):
            return value
        if not isinstance(value, dict):
            raise ConfigError(f"{key} must be a table", key=key)
        return from_mapping(type(default), value, prefix=key + ".")
    if value is None:
        return None
    if default is None and isinstance(value, dict):
        return _coerce(value, ErrorDistribution.normal(1.0), key)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key} must be true or false", key=key)
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{key} must be an integer", key=key)
        return int(value)
    if isinstance(default, float) or default is None:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number", key=key)
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string", key=key)
        return value
    return value


def from_mapping(cls, data: dict, prefix: str = ""):
    """Build ``cls`` from ``data``, rejecting keys that are not fields."""
    fields = {f.name: f for f in dataclasses.fields(cls) if not f.name.startswith("_")}
    for k in data:
        if k not in fields:
            raise ConfigError(f"unknown config key {prefix}{k!r}", key=f"{prefix}{k}")
    kwargs = {}
    for name, f in fields.items():
        if name in data:
            kwargs[name] = _coerce(data[name], _field_default(f), prefix + name)
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except DomainError as exc:
        raise DomainError(f"{prefix.rstrip('.') or cls.__name__}: {exc}") from exc


def to_mapping(obj) -> dict:
    out = {}
    for f in dataclasses.fields(obj):
        if f.name.startswith("_"):
            continue
        v = getattr(obj, f.name)
        if isinstance(v, ErrorDistribution):
            v = v.to_config()
        elif dataclasses.is_dataclass(v):
            v = to_mapping(v)
        out[f.name] = v
    return out


def build_experiment(selector: str, file_data: Optional[dict] = None, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Merge defaults, file values and CLI overrides (``None`` = not given).

    For ``simulate`` the ``model`` key names the simulated variant; for the
    solver subcommands it must match the subcommand when present.
    """
    if selector not in MODEL_CONFIGS:
        raise ConfigError(f"unknown model {selector!r}", key="model")
    data = dict(file_data or {})
    for k, v in (overrides or {}).items():
        if v is not None:
            if k == "grid" and isinstance(v, dict):
                data["grid"] = {**data.get("grid", {}), **v}
            else:
                data[k] = v
    fmt = data.pop("format", None)
    out = data.pop("out", None)
    workers = data.pop("workers", None)
    if selector != "simulate":
        model = data.pop("model", selector)
        if model != selector:
            raise ConfigError(f"config is for model {model!r}, not {selector!r}", key="model")
    if fmt is not None and fmt not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}", key="format")
    if workers is not None and (isinstance(workers, bool) or not isinstance(workers, int) or workers < 1):
        raise ConfigError("workers must be a positive integer", key="workers")
    params = from_mapping(MODEL_CONFIGS[selector], data)
    return ExperimentConfig(selector, params, fmt, out, workers)


def parse_range(spec: str):
    """``"a:b:n"`` -> n evenly spaced values from a to b inclusive."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"range must look like start:stop:count, got {spec!r}", key="theta_range")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"bad range {spec!r}", key="theta_range") from exc
    if n < 0:
        raise ConfigError("range count must be non-negative", key="theta_range")
    if n == 1:
        return [a]
    return [a + (b - a) * i / (n - 1) for i in range(n)]
