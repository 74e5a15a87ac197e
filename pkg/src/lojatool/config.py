"""Run configuration: one nested YAML document plus ``key.path=value`` overrides.

Every tolerance of the library is reachable here, e.g.
``classify.split.newton_tol`` or ``sampling.n_bins``.  Unknown keys are
rejected so that a typo cannot silently fall back to a default.
"""

from __future__ import annotations

import dataclasses
import os
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import InputError
from .flow import FlowOptions
from .lojasiewicz import SamplingOptions
from .morse_bott import ClassifyOptions
from .poly import PRUNE_TOL

ENV_VAR = "LOJATOOL_CONFIG"


@dataclass(frozen=True)
class PolyOptions:
    prune: float = PRUNE_TOL


@dataclass(frozen=True)
class FlowRunOptions:
    t_end: float = 1e4
    start_radius: float = 0.1  # analyze/exponent: flow starts at distance ~start_radius from x0
    integrator: FlowOptions = field(default_factory=FlowOptions)


@dataclass(frozen=True)
class ReduceOptions:
    grid: int = 5
    grid_fraction: float = 0.5  # grid half-width as a fraction of the trust radius


@dataclass(frozen=True)
class AnalyzeOptions:
    run_flow: bool = False
    inequality_atol: float = 1e-12


@dataclass(frozen=True)
class Config:
    poly: PolyOptions = field(default_factory=PolyOptions)
    classify: ClassifyOptions = field(default_factory=ClassifyOptions)
    sampling: SamplingOptions = field(default_factory=SamplingOptions)
    flow: FlowRunOptions = field(default_factory=FlowRunOptions)
    reduce: ReduceOptions = field(default_factory=ReduceOptions)
    analyze: AnalyzeOptions = field(default_factory=AnalyzeOptions)


def to_dict(obj) -> dict:
    """Plain nested dict of a config dataclass (infinities kept as floats)."""
    return dataclasses.asdict(obj)


def _coerce(tp, value, where: str):
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = typing.get_args(tp)
        if value is None and type(None) in args:
            return None
        tp = next(a for a in args if a is not type(None))
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise InputError(f"config section {where or '<root>'} must be a mapping")
        return from_dict(tp, value, where)
    if tp is bool:
        if not isinstance(value, bool):
            raise InputError(f"config key {where} expects true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise InputError(f"config key {where} expects an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, str):
            try:
                return float(value)  # yaml reads "1e-8" as a string
            except ValueError:
                pass
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InputError(f"config key {where} expects a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise InputError(f"config key {where} expects a string, got {value!r}")
        return value
    return value


def from_dict(cls, data: dict, where: str = ""):
    """Build ``cls`` from a (partial) nested mapping; missing keys keep defaults."""
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        prefix = where + "." if where else ""
        raise InputError(f"unknown config key(s): {', '.join(prefix + k for k in unknown)}")
    kw = {}
    for k, v in data.items():
        kw[k] = _coerce(hints[k], v, f"{where}.{k}" if where else k)
    return dataclasses.replace(cls(), **kw)


def apply_overrides(cfg: Config, overrides: list[str]) -> Config:
    """Apply ``a.b.c=value`` strings (values parsed as YAML scalars)."""
    data = to_dict(cfg)
    for item in overrides:
        if "=" not in item:
            raise InputError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        path = key.strip().split(".")
        node = data
        for part in path[:-1]:
            if not isinstance(node.get(part), dict):
                raise InputError(f"unknown config section in {key!r}")
            node = node[part]
        if path[-1] not in node or isinstance(node[path[-1]], dict):
            raise InputError(f"unknown config key {key!r}")
        node[path[-1]] = yaml.safe_load(raw)
    return from_dict(Config, data)


def load_config(path: str | os.PathLike | None = None, overrides: list[str] | None = None,
                env: dict | None = None) -> Config:
    """Load the config from ``path``, else ``$LOJATOOL_CONFIG``, else defaults."""
    env = os.environ if env is None else env
    if path is None:
        path = env.get(ENV_VAR) or None
    data: dict = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise InputError(f"config {path} is not valid YAML: {exc}") from exc
        if not isinstance(data, dict):
            raise InputError(f"config {path} must be a mapping at the top level")
    cfg = from_dict(Config, data)
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg
