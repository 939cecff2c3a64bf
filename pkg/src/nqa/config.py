"""Experiment configuration: YAML file plus ``key=value`` overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .core import ChainParams, ParameterError, make_params

COMMANDS = (
    "sweep-delta",
    "mode-dynamics",
    "kinks",
    "widths",
    "adiabaticity",
    "excitation-surface",
    "estimate-time",
    "validate",
)
ENGINES = ("diabatic", "adiabatic", "both", "weber")


class ConfigError(ValueError):
    pass


@dataclass
class SweepSpec:
    param: str = "delta"
    start: float = 0.0
    stop: float = 100.0
    count: int = 21
    scale: str = "linear"

    def values(self) -> np.ndarray:
        if self.scale == "linear":
            return np.linspace(self.start, self.stop, self.count)
        return np.geomspace(self.start, self.stop, self.count)


@dataclass
class ExperimentConfig:
    command: str = "estimate-time"
    J: float = 0.5
    g: float = 10.0
    delta: float = 10.0
    tau: float = 500.0
    N: int = 1024
    N_list: list = field(default_factory=lambda: [64, 256, 512, 1024])
    sweep: SweepSpec = field(default_factory=SweepSpec)
    modes: object = "all"
    engine: str = "diabatic"
    samples: int = 1001
    phi_count: int = 128
    s: float = 0.0
    axis: str = "delta"
    time_selector: str = "at_tau"
    rtol: float = 1e-12
    atol: float = 1e-14
    out: str = "results"
    workers: object = None

    def params(self, **changes) -> ChainParams:
        kw = dict(J=self.J, g=self.g, delta=self.delta, tau=self.tau, N=self.N)
        kw.update(changes)
        return make_params(**kw)

    def mode_list(self, N: int | None = None) -> list[int]:
        N = self.N if N is None else N
        if self.modes == "all":
            return list(range(1, N // 2 + 1))
        return [int(k) for k in self.modes]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _coerce(cfg: ExperimentConfig) -> ExperimentConfig:
    try:
        for name in ("J", "g", "delta", "tau", "s", "rtol", "atol"):
            setattr(cfg, name, float(getattr(cfg, name)))
        for name in ("N", "samples", "phi_count"):
            v = getattr(cfg, name)
            if isinstance(v, float) and v.is_integer():
                v = int(v)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ConfigError(f"{name} must be an integer")
            setattr(cfg, name, v)
        if isinstance(cfg.sweep, dict):
            unknown = set(cfg.sweep) - {f.name for f in dataclasses.fields(SweepSpec)}
            if unknown:
                raise ConfigError(f"unknown sweep keys: {sorted(unknown)}")
            cfg.sweep = SweepSpec(**cfg.sweep)
        cfg.sweep.start = float(cfg.sweep.start)
        cfg.sweep.stop = float(cfg.sweep.stop)
        cfg.sweep.count = int(cfg.sweep.count)
        cfg.N_list = [int(n) for n in np.atleast_1d(cfg.N_list)]
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"bad value in config: {e}") from e
    return cfg


def validate_config(cfg: ExperimentConfig) -> ExperimentConfig:
    cfg = _coerce(cfg)
    if cfg.command not in COMMANDS:
        raise ConfigError(f"unknown command {cfg.command!r}")
    if cfg.engine not in ENGINES:
        raise ConfigError(f"unknown engine {cfg.engine!r}")
    if cfg.sweep.count < 2:
        raise ConfigError("sweep count must be at least 2")
    if cfg.sweep.param not in ("delta", "tau", "N"):
        raise ConfigError("sweep param must be delta, tau or N")
    if cfg.sweep.scale not in ("linear", "log"):
        raise ConfigError("sweep scale must be linear or log")
    if cfg.sweep.scale == "log" and cfg.sweep.start <= 0:
        raise ConfigError("log sweeps need a positive start")
    if cfg.modes != "all":
        if not isinstance(cfg.modes, (list, tuple)) or len(cfg.modes) == 0:
            raise ConfigError("modes must be 'all' or a non-empty list")
        if any(not 1 <= int(k) <= cfg.N // 2 for k in cfg.modes):
            raise ConfigError(f"mode indices must lie in 1..{cfg.N // 2}")
    if cfg.samples < 2:
        raise ConfigError("samples must be at least 2")
    if cfg.phi_count < 2:
        raise ConfigError("phi_count must be at least 2")
    if not 0.0 <= cfg.s <= 1.0:
        raise ConfigError("s must lie in [0, 1]")
    if cfg.axis not in ("delta", "alpha"):
        raise ConfigError("axis must be delta or alpha")
    if cfg.time_selector not in ("at_tc", "at_tau"):
        raise ConfigError("time_selector must be at_tc or at_tau")
    if not (cfg.rtol > 0 and cfg.atol > 0):
        raise ConfigError("tolerances must be positive")
    if cfg.workers is not None and (not isinstance(cfg.workers, int) or cfg.workers < 1):
        raise ConfigError("workers must be a positive integer")
    try:
        cfg.params()
        for n in cfg.N_list:
            cfg.params(N=n)
    except ParameterError as e:
        raise ConfigError(str(e)) from e
    return cfg


def _apply(data: dict, key: str, value) -> None:
    parts = key.split(".")
    d = data
    for p in parts[:-1]:
        d = d.setdefault(p, {})
        if not isinstance(d, dict):
            raise ConfigError(f"cannot set {key}: {p} is not a mapping")
    d[parts[-1]] = value


def load_config(path=None, overrides=(), command: str | None = None) -> ExperimentConfig:
    data: dict = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from e
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"invalid YAML: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError("config root must be a mapping")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        _apply(data, k.strip(), yaml.safe_load(v))
    if command is not None:
        if "command" in data and data["command"] != command:
            raise ConfigError(f"config command {data['command']!r} conflicts with {command!r}")
        data["command"] = command
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return validate_config(ExperimentConfig(**data))

