"""Flat ``key = value`` configuration with named profiles.

Resolution order: profile defaults, then the config file, then explicit
command-line overrides.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

from . import params
from .chain import ChainConfig, PAPER_EPOCH_LEN

ENV_VAR = "CURVEPOW_CONFIG"

PROFILES = {
    "paper": {"epoch_len": PAPER_EPOCH_LEN, "cm_threshold": params.PAPER_CM_THRESHOLD, "d_max": params.D_MAX},
    "desk": {"epoch_len": 8, "cm_threshold": params.DESK_CM_THRESHOLD, "d_max": 20},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    profile: str = "desk"
    d: int = 10
    epoch_len: int = 8
    cm_threshold: int = params.DESK_CM_THRESHOLD
    d_max: int = 20
    solver: str = "rho"
    workers: int = 1
    seed: int = 0
    chain_path: str = "chain.jsonl"
    miners: int = 4
    relay_delay: int = 0
    run_length: int = 32
    work_quantum: int = 64

    def chain_config(self) -> ChainConfig:
        return ChainConfig(self.d, self.epoch_len, self.cm_threshold, self.d_max)

    def validate(self) -> "Config":
        if self.profile not in PROFILES:
            raise ConfigError(f"unknown profile {self.profile!r}")
        if not params.D_MIN <= self.d <= self.d_max:
            raise ConfigError(f"d={self.d} outside [{params.D_MIN}, {self.d_max}] for profile {self.profile}")
        if self.solver not in ("naive", "bsgs", "rho", "kangaroo"):
            raise ConfigError(f"unknown solver {self.solver!r}")
        if self.workers < 1 or self.epoch_len < 1:
            raise ConfigError("workers and epoch_len must be positive")
        return self


_INT_FIELDS = {f.name for f in fields(Config) if f.type in ("int", int)}


def parse_int(text: str) -> int:
    """Decimal, 0x-hex, or a power written as ``2^k``."""
    text = text.strip().replace("_", "")
    m = re.fullmatch(r"(\d+)\s*\^\s*(\d+)", text)
    if m:
        return int(m.group(1)) ** int(m.group(2))
    return int(text, 0)


def parse_file(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in {f.name for f in fields(Config)}:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _coerce(values: dict) -> dict:
    out = {}
    for k, v in values.items():
        if v is None:
            continue
        if k in _INT_FIELDS and isinstance(v, str):
            try:
                v = parse_int(v)
            except ValueError:
                raise ConfigError(f"{k} must be an integer, got {v!r}") from None
        out[k] = v
    return out


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> Config:
    """Build a :class:`Config` from profile, file (``path`` or $CURVEPOW_CONFIG) and overrides."""
    path = path or os.environ.get(ENV_VAR)
    file_values = parse_file(Path(path).read_text()) if path else {}
    overrides = _coerce(overrides or {})
    file_values = _coerce(file_values)
    profile = overrides.get("profile", file_values.get("profile", "desk"))
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}")
    cfg = replace(Config(), profile=profile, **PROFILES[profile])
    cfg = replace(cfg, **file_values)
    cfg = replace(cfg, **overrides)
    return cfg.validate()
