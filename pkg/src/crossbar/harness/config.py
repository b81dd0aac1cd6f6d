"""``key = value`` config files with dotted keys.

Sections used by the harness: ``device.*``, ``io.*``, ``pulses.*`` and
``profile.*`` (hybrid cost constants; ``profile.name`` picks low/mid/high and
individual constants may carry a unit suffix, e.g. ``profile.t_i_ns = 5``),
``digital.*`` and free keys such as ``seed``.
"""

from __future__ import annotations

import dataclasses
import math
import os
from pathlib import Path

from ..cost import DigitalProfile, HardwareProfile
from ..tile import DeviceParams, IOParams, PulseConfig

SEED_ENV = "CROSSBAR_SEED"

# unit suffix -> factor to microseconds / micro-Joules
_UNITS = {"us": 1.0, "ns": 1e-3, "ms": 1e3, "s": 1e6,
          "uj": 1.0, "nj": 1e-3, "pj": 1e-6, "mj": 1e3, "j": 1e6}


class ConfigError(ValueError):
    pass


def _parse_value(raw: str):
    low = raw.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", "inf", "infinity"):
        return None if low == "none" else math.inf
    for conv in (int, float):
        try:
            return conv(raw)
        except ValueError:
            pass
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        return raw[1:-1]
    return raw


def parse_config(text: str, source: str = "<config>") -> dict:
    """Flat ``{dotted.key: value}`` mapping.  ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value or any(c.isspace() for c in key):
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        out[key] = _parse_value(value)
    return out


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path))


def section(cfg: dict, prefix: str) -> dict:
    p = prefix + "."
    return {k[len(p):]: v for k, v in cfg.items() if k.startswith(p)}


def _build(cls, values: dict, base=None, where=""):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - names
    if unknown:
        raise ConfigError(f"unknown {where} keys: {', '.join(sorted(unknown))}")
    try:
        return dataclasses.replace(base, **values) if base is not None else cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {where} settings: {exc}") from None


def device_params(cfg: dict, base: DeviceParams | None = None) -> DeviceParams:
    return _build(DeviceParams, section(cfg, "device"), base or DeviceParams(), "device")


def io_params(cfg: dict, base: IOParams | None = None) -> IOParams:
    return _build(IOParams, section(cfg, "io"), base or IOParams(), "io")


def pulse_config(cfg: dict, **overrides) -> PulseConfig:
    vals = section(cfg, "pulses")
    vals.update({k: v for k, v in overrides.items() if v is not None})
    return _build(PulseConfig, vals, PulseConfig(), "pulses")


def hardware_profile(cfg: dict, name: str | None = None) -> HardwareProfile:
    """Named base profile with per-constant overrides from ``profile.*``."""
    vals = section(cfg, "profile")
    base = name or vals.pop("name", "low")
    vals.pop("name", None)
    fields = {}
    for key, v in vals.items():
        stem, _, unit = key.rpartition("_")
        if unit in _UNITS and stem:
            fields[stem] = v * _UNITS[unit]
        else:
            fields[key] = v
    try:
        return HardwareProfile.named(str(base), **fields)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid profile settings: {exc}") from None


def digital_profile(cfg: dict) -> DigitalProfile:
    return _build(DigitalProfile, section(cfg, "digital"), DigitalProfile(), "digital")


def default_seed(cfg: dict | None = None) -> int:
    """Seed from the config, else ``CROSSBAR_SEED``, else 0."""
    if cfg and "seed" in cfg:
        return int(cfg["seed"])
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return 0
