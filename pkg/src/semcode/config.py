"""Run configuration: TOML file + environment + command-line flags.

Precedence, lowest to highest: built-in defaults, ``--config`` file,
``SEMCODE_SEED`` (seed only), explicit flags.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

from .errors import InvalidParameterError
from .experiments import COST_GRID, REFERENCE_LAMBDAS

SEED_ENV = "SEMCODE_SEED"


@dataclass
class RunConfig:
    pmf: str = "zipf:100:0.4"
    case: str = "edt"
    rho: float = 0.5
    kappa: int = 1
    w: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    calibrate_w: bool = False
    lam: float = 1.0
    k: int = 18
    lambdas: list = field(default_factory=lambda: list(REFERENCE_LAMBDAS))
    ks: list = field(default_factory=list)
    costparams: list = field(default_factory=lambda: list(COST_GRID))
    horizon: float = 1e5
    seed: int = 1
    warmup_fraction: float = 0.01
    replications: int = 1
    use_integer_lengths: bool = False
    lengths_file: str = ""
    out: str = "out"

    def to_toml_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["lambda"] = d.pop("lam")
        return d


# TOML key -> attribute name
_KEYS = {f.name: f.name for f in dataclasses.fields(RunConfig)}
_KEYS["lambda"] = _KEYS.pop("lam")
_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, value):
    kind = _TYPES[name]
    try:
        if kind == "float":
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if kind == "int":
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if kind == "bool":
            if isinstance(value, str):
                if value.lower() in ("1", "true", "yes", "on"):
                    return True
                if value.lower() in ("0", "false", "no", "off"):
                    return False
                raise TypeError
            return bool(value)
        if kind == "list":
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            conv = int if name == "ks" else float
            return [conv(v) for v in value]
        return str(value)
    except (TypeError, ValueError):
        raise InvalidParameterError(f"invalid value for {name}: {value!r}", name) from None


def load_toml(path) -> dict:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise InvalidParameterError(f"cannot read config {path}: {exc}", "config") from exc
    except tomllib.TOMLDecodeError as exc:
        raise InvalidParameterError(f"malformed config {path}: {exc}", "config") from exc
    unknown = sorted(set(raw) - set(_KEYS))
    if unknown:
        raise InvalidParameterError(f"unknown config keys: {', '.join(unknown)}", unknown[0])
    return {_KEYS[k]: v for k, v in raw.items()}


def resolve(config_path=None, overrides: dict | None = None, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    values = {}
    if config_path:
        values.update(load_toml(config_path))
    if environ.get(SEED_ENV):
        values["seed"] = environ[SEED_ENV]
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    cfg = RunConfig()
    for name, value in values.items():
        setattr(cfg, name, _coerce(name, value))
    return cfg


def write_resolved(cfg: RunConfig, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / "config.toml"
    with path.open("wb") as fh:
        tomli_w.dump(cfg.to_toml_dict(), fh)
    return path
