"""YAML scenario files for the simulator and the two-user study.

Keys match the ``SimConfig`` / ``RectangleScenario`` field names. Angles are
radians, either numeric or a ``pi`` expression such as ``pi/6`` or ``2*pi/9``.
"""
from __future__ import annotations

import dataclasses
import math
import re
from pathlib import Path
from typing import Any, Mapping

import yaml

from .simengine import ConfigError, NodeSpec, SimConfig

SIM_REQUIRED = ("m_antennas", "n_users", "k_factor", "snr_db", "strategy", "seed", "nodes")
TWOUSER_REQUIRED = ("d", "h_u", "c_min", "c_max", "m_antennas", "snr_db")
TWOUSER_DEFAULTS = {"path_loss_exp": 1.0, "delta_step": 0.01, "side_step": 50.0, "n_points": 200}
ANGLE_KEYS = ("delta_max", "uav_heading")

_PI_EXPR = re.compile(r"^\s*(-?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$")
_SIM_FIELDS = {f.name: f for f in dataclasses.fields(SimConfig)}


class MissingKeyError(ConfigError):
    def __init__(self, key: str):
        super().__init__(f"missing required key: {key}")
        self.key = key


def parse_angle(value) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    m = _PI_EXPR.match(str(value))
    if not m:
        raise ConfigError(f"cannot parse angle {value!r}")
    coef = m.group(1)
    coef = -1.0 if coef == "-" else float(coef) if coef else 1.0
    denom = float(m.group(2)) if m.group(2) else 1.0
    return coef * math.pi / denom


def _coerce_override(raw: str):
    try:
        return yaml.safe_load(raw)
    except yaml.YAMLError:
        return raw


def parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, raw = item.split("=", 1)
        out[key.strip()] = _coerce_override(raw.strip())
    return out


def _node(entry: Mapping[str, Any]) -> NodeSpec:
    if not isinstance(entry, Mapping) or "x" not in entry or "y" not in entry:
        raise ConfigError("each node needs at least x and y")
    unknown = set(entry) - {f.name for f in dataclasses.fields(NodeSpec)}
    if unknown:
        raise ConfigError(f"unknown node keys: {sorted(unknown)}")
    return NodeSpec(**{k: (None if v is None else float(v)) for k, v in entry.items()})


def read_yaml(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping of keys to values")
    return data


def sim_config_from_dict(data: Mapping[str, Any], overrides: Mapping[str, Any] | None = None) -> SimConfig:
    merged = dict(data)
    merged.update(overrides or {})
    for key in SIM_REQUIRED:
        if key not in merged:
            raise MissingKeyError(key)
    kwargs = {}
    for key, value in merged.items():
        if key == "nodes":
            if not isinstance(value, list):
                raise ConfigError("nodes must be a list")
            kwargs["initial_nodes"] = tuple(_node(e) for e in value)
        elif key in _SIM_FIELDS and key != "initial_nodes":
            if key in ANGLE_KEYS:
                value = parse_angle(value)
            elif key == "d_max" and isinstance(value, str):
                value = float(value)
            kwargs[key] = value
        else:
            raise ConfigError(f"unknown config key: {key}")
    for key in ("m_antennas", "n_users", "l_steps", "mc_samples", "seed", "n_w",
                "turn_step", "grid_points"):
        if key in kwargs:
            if float(kwargs[key]) != int(kwargs[key]):
                raise ConfigError(f"{key} must be an integer")
            kwargs[key] = int(kwargs[key])
    try:
        cfg = SimConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


def load_sim_config(path, overrides: Mapping[str, Any] | None = None) -> SimConfig:
    return sim_config_from_dict(read_yaml(path), overrides)


def sim_config_to_dict(cfg: SimConfig) -> dict:
    """Plain-data echo of a config, loadable by ``sim_config_from_dict``."""
    out = {}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if f.name == "initial_nodes":
            out["nodes"] = [{k: v for k, v in dataclasses.asdict(n).items() if v is not None}
                            for n in value]
        else:
            out[f.name] = value
    return out


def twouser_settings(data: Mapping[str, Any], overrides: Mapping[str, Any] | None = None) -> dict:
    merged = dict(TWOUSER_DEFAULTS)
    merged.update(data)
    merged.update(overrides or {})
    for key in TWOUSER_REQUIRED:
        if key not in merged:
            raise MissingKeyError(key)
    unknown = set(merged) - set(TWOUSER_REQUIRED) - set(TWOUSER_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    out = {k: float(v) for k, v in merged.items()}
    out["m_antennas"] = int(out["m_antennas"])
    out["n_points"] = int(out["n_points"])
    return out
