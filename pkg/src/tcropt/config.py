"""Config file loading with human-friendly unit suffixes.

Quantities may be plain numbers (SI base units) or strings like
"10 MHz", "500 KB", "-134 dBm", "0.2 W". Data sizes use decimal
kilobytes and are converted to bits.
"""

from __future__ import annotations

import re
from dataclasses import fields, replace
from typing import Any

import yaml

from .scenario import ScenarioConfig, SystemParams

_MULTIPLIERS = {
    "hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9,
    "w": 1.0, "mw": 1e-3, "kw": 1e3,
    "b": 1.0, "kb": 8e3, "mb": 8e6, "gb": 8e9,
    "bit": 1.0, "bits": 1.0,
    "bps": 1.0, "kbps": 1e3, "mbps": 1e6, "gbps": 1e9,
    "s": 1.0, "ms": 1e-3, "us": 1e-6,
    "m": 1.0, "km": 1e3,
    "j": 1.0, "mj": 1e-3,
}

_QUANTITY_RE = re.compile(
    r"^\s*([-+]?\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)\s*([a-zA-Z/]*)\s*$")


class ConfigError(ValueError):
    """Raised for config files that cannot be understood."""


def parse_quantity(value: Any) -> float:
    """Convert a number or "value unit" string to SI base units.

    dBm values (including spectral densities written as dBm/Hz) become
    watts; byte sizes become bits.
    """
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"cannot parse quantity from {value!r}")
    match = _QUANTITY_RE.match(value)
    if not match:
        raise ConfigError(f"malformed quantity {value!r}")
    number = float(match.group(1))
    unit = match.group(2).lower()
    if unit in ("", None):
        return number
    if unit in ("dbm", "dbm/hz"):
        return 10.0 ** ((number - 30.0) / 10.0)
    if unit == "db":
        return 10.0 ** (number / 10.0)
    if unit in _MULTIPLIERS:
        return number * _MULTIPLIERS[unit]
    raise ConfigError(f"unknown unit {match.group(2)!r} in {value!r}")


def _get(mapping: dict, key: str, convert=parse_quantity, default=None):
    if key not in mapping:
        return default
    raw = mapping.pop(key)
    try:
        return convert(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r}: {exc}") from exc


def _reject_unknown(mapping: dict, context: str) -> None:
    if mapping:
        names = ", ".join(sorted(mapping))
        raise ConfigError(f"unknown keys in {context}: {names}")


def scenario_config_from_mapping(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    data = dict(data)
    cfg = ScenarioConfig()
    params = cfg.params

    top: dict[str, Any] = {}
    if "users" in data:
        top["n_users"] = int(data.pop("users"))
    if "servers" in data:
        top["n_servers"] = int(data.pop("servers"))
    if "area" in data:
        top["area_m"] = _get({"area": data.pop("area")}, "area")
    if "data_size" in data:
        rng = data.pop("data_size")
        if not (isinstance(rng, (list, tuple)) and len(rng) == 2):
            raise ConfigError("data_size must be a [low, high] pair")
        top["data_bits_lo"] = parse_quantity(rng[0])
        top["data_bits_hi"] = parse_quantity(rng[1])

    user = data.pop("user", {}) or {}
    if not isinstance(user, dict):
        raise ConfigError("user section must be a mapping")
    user = dict(user)
    for key, dest in (("max_power", "user_max_power"),
                      ("max_freq", "user_max_freq"),
                      ("cycles_per_bit", "user_cycles_per_bit"),
                      ("switch_cap", "user_switch_cap")):
        val = _get(user, key)
        if val is not None:
            top[dest] = val
    _reject_unknown(user, "user")

    server = data.pop("server", {}) or {}
    if not isinstance(server, dict):
        raise ConfigError("server section must be a mapping")
    server = dict(server)
    for key, dest in (("max_power", "server_max_power"),
                      ("max_freq", "server_max_freq"),
                      ("bandwidth", "server_bandwidth"),
                      ("switch_cap", "server_switch_cap"),
                      ("data_cycles_per_bit", "server_data_cycles_per_bit"),
                      ("block_cycles_per_bit", "server_block_cycles_per_bit")):
        val = _get(server, key)
        if val is not None:
            top[dest] = val
    _reject_unknown(server, "server")

    pupdates: dict[str, Any] = {}
    weights = data.pop("weights", {}) or {}
    if not isinstance(weights, dict):
        raise ConfigError("weights section must be a mapping")
    weights = dict(weights)
    for key, dest in (("delay", "delay_weight"), ("energy", "energy_weight")):
        val = _get(weights, key)
        if val is not None:
            pupdates[dest] = val
    _reject_unknown(weights, "weights")

    chain = data.pop("blockchain", {}) or {}
    if not isinstance(chain, dict):
        raise ConfigError("blockchain section must be a mapping")
    chain = dict(chain)
    for key, dest in (("block_ratio", "block_ratio"),
                      ("block_size", "block_size_bits"),
                      ("wired_rate", "wired_rate_bps"),
                      ("verify_cycles", "verify_cycles"),
                      ("history_score", "history_score")):
        val = _get(chain, key)
        if val is not None:
            pupdates[dest] = val
    _reject_unknown(chain, "blockchain")

    trust = data.pop("trust", {}) or {}
    if not isinstance(trust, dict):
        raise ConfigError("trust section must be a mapping")
    trust = dict(trust)
    for key, dest in (("scale", "trust_scale"), ("gain", "trust_gain")):
        val = _get(trust, key)
        if val is not None:
            pupdates[dest] = val
    _reject_unknown(trust, "trust")

    if "noise" in data:
        pupdates["noise_density"] = parse_quantity(data.pop("noise"))
    if "feedback_ratio" in data:
        pupdates["feedback_ratio"] = parse_quantity(data.pop("feedback_ratio"))

    solver = data.pop("solver", {}) or {}
    if not isinstance(solver, dict):
        raise ConfigError("solver section must be a mapping")
    solver = dict(solver)
    solver_fields = {f.name for f in fields(SystemParams)}
    for key in list(solver):
        if key not in solver_fields:
            raise ConfigError(f"unknown solver option {key!r}")
        val = solver.pop(key)
        pupdates[key] = type(getattr(params, key))(val)

    _reject_unknown(data, "config root")
    if pupdates:
        params = replace(params, **pupdates)
    cfg = replace(cfg, params=params, **top)
    problems = cfg.validate()
    if problems:
        raise ConfigError("invalid configuration: " + "; ".join(problems))
    return cfg


def load_scenario_config(path: str) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path!r}: {exc}") from exc
    if data is None:
        data = {}
    return scenario_config_from_mapping(data)


__all__ = ["ConfigError", "parse_quantity", "scenario_config_from_mapping",
           "load_scenario_config"]
