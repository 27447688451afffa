"""Run configuration: a YAML file merged with command-line flags."""

from __future__ import annotations

import os
import shutil
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from .detectors import DetectorConfig
from .oracle import DEFAULT_INPUT_BUDGET, OracleMode
from .pathcheck import BACKENDS
from .taint import SrvType

FORMATS = ("text", "json", "sarif")
ORACLE_KEY_ENV = "SRVSCAN_ORACLE_KEY"


class ConfigError(ValueError):
    """The configuration cannot be used; nothing has been analysed."""


@dataclass(frozen=True)
class RunConfig:
    inputs: tuple[Path, ...] = ()
    detectors: frozenset[SrvType] = frozenset(SrvType)
    oracle: OracleMode = OracleMode.HEURISTIC
    oracle_endpoint: Optional[str] = None
    oracle_model: str = "gpt-4o"
    oracle_budget: int = DEFAULT_INPUT_BUDGET
    oracle_rate: Optional[float] = None
    transcript: Optional[Path] = None
    replay_fallback: bool = False
    solver: str = "builtin"
    solver_path: str = "z3"
    solver_timeout_ms: int = 5000
    pathcheck: bool = True
    format: str = "text"
    output: Optional[Path] = None
    jobs: int = 1
    debug_dumps: Optional[Path] = None
    json_timings: bool = False
    half_order: Optional[int] = None

    @property
    def oracle_key(self) -> Optional[str]:
        return os.environ.get(ORACLE_KEY_ENV)

    def detector_config(self) -> DetectorConfig:
        base = DetectorConfig(enabled=self.detectors)
        if self.half_order is not None:
            base = replace(base, secp256k1_half_order=self.half_order)
        return base

    def validate(self) -> "RunConfig":
        if not self.inputs:
            raise ConfigError("no input paths given")
        for p in self.inputs:
            if not p.exists():
                raise ConfigError(f"input {p} does not exist")
        if not self.detectors:
            raise ConfigError("no detectors enabled")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {', '.join(FORMATS)}")
        if self.solver not in BACKENDS:
            raise ConfigError(f"solver must be one of {', '.join(BACKENDS)}")
        if self.solver == "external" and shutil.which(self.solver_path) is None:
            raise ConfigError(f"solver binary {self.solver_path!r} not found")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        if self.oracle_budget < 1:
            raise ConfigError("oracle budget must be positive")
        if self.solver_timeout_ms < 1:
            raise ConfigError("solver timeout must be positive")
        if self.oracle_rate is not None and self.oracle_rate <= 0:
            raise ConfigError("oracle rate must be positive")
        if self.oracle is OracleMode.LIVE and not self.oracle_endpoint:
            raise ConfigError("live oracle mode needs --oracle-endpoint")
        if self.oracle is OracleMode.REPLAY:
            if self.transcript is None:
                raise ConfigError("replay oracle mode needs --transcript")
            if not self.transcript.exists():
                raise ConfigError(f"transcript {self.transcript} does not exist")
        try:
            self.detector_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self


def parse_detectors(value: Any) -> frozenset[SrvType]:
    items = value.split(",") if isinstance(value, str) else list(value)
    try:
        return frozenset(SrvType.parse(str(x)) for x in items if str(x).strip())
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


_PATHS = {"transcript", "output", "debug_dumps"}


def _coerce(name: str, value: Any) -> Any:
    if value is None:
        return None
    try:
        if name == "inputs":
            items = [value] if isinstance(value, (str, Path)) else list(value)
            return tuple(Path(x) for x in items)
        if name == "detectors":
            return parse_detectors(value)
        if name == "oracle":
            return OracleMode(str(value))
        if name in _PATHS:
            return Path(value)
        if name in ("oracle_budget", "solver_timeout_ms", "jobs", "half_order"):
            if isinstance(value, bool):
                raise ValueError(f"{value!r} is not an integer")
            return int(value)
        if name == "oracle_rate":
            return float(value)
        if name in ("replay_fallback", "pathcheck", "json_timings"):
            if not isinstance(value, bool):
                raise ValueError(f"{value!r} is not a boolean")
            return value
        return str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {name}: {exc}") from None


def from_mapping(data: Mapping[str, Any], base: Optional[RunConfig] = None) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    changes: dict[str, Any] = {}
    for raw_key, value in data.items():
        key = str(raw_key).replace("-", "_")
        if key not in known:
            raise ConfigError(f"unknown configuration key {raw_key!r}")
        changes[key] = _coerce(key, value)
    return replace(base or RunConfig(), **changes)


def load_file(path: Path) -> dict[str, Any]:
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return doc


def resolve(config_file: Optional[Path], flags: Mapping[str, Any]) -> RunConfig:
    """File values first, then every flag that was given."""
    cfg = RunConfig()
    if config_file is not None:
        cfg = from_mapping(load_file(config_file), cfg)
    given = {k: v for k, v in flags.items() if v is not None}
    return from_mapping(given, cfg).validate()
