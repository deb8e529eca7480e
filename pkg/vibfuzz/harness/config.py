from __future__ import annotations

import dataclasses
import logging
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, Mapping, Optional

from dotenv import dotenv_values

logger = logging.getLogger(__name__)

ENV_PREFIX = "VIBFUZZ_"
FAMILY_KINDS = ("triangular", "trapezoidal", "gaussian")


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    """
    Central place for the knobs shared by extraction, compilation, diagnosis and experiments.
    """

    kind: str = "trapezoidal"
    sigma_divisor: float = 6.0
    shoulder_fraction: float = 0.25
    grid_points: int = 1201
    probe_offset: float = 0.01
    gauss_floor: float = 0.0125
    bench_iterations: int = 10_000
    bench_warmup: int = 100
    seed: int = 0
    data_path: Optional[str] = None
    table_path: Optional[str] = None
    rulebase_path: Optional[str] = None
    report_dir: Optional[str] = None

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.kind not in FAMILY_KINDS:
            raise ConfigError(f"Unknown family kind '{self.kind}' (expected one of {', '.join(FAMILY_KINDS)})")
        for name in ("sigma_divisor", "shoulder_fraction", "grid_points", "probe_offset", "bench_iterations"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be strictly positive, got {getattr(self, name)}")
        if self.shoulder_fraction >= 0.5:
            raise ConfigError(f"shoulder_fraction must be < 0.5, got {self.shoulder_fraction}")
        if self.grid_points < 3:
            raise ConfigError(f"grid_points must be >= 3, got {self.grid_points}")
        if self.probe_offset >= 0.5:
            raise ConfigError(f"probe_offset must be < 0.5, got {self.probe_offset}")
        if not 0 <= self.gauss_floor < 1:
            raise ConfigError(f"gauss_floor must lie in [0, 1), got {self.gauss_floor}")
        if self.bench_warmup < 0:
            raise ConfigError(f"bench_warmup must be >= 0, got {self.bench_warmup}")

    def replace(self, **overrides) -> "PipelineConfig":
        return dataclasses.replace(self, **overrides)


def load_config(
    config_file: Optional[Path] = None,
    overrides: Optional[Mapping[str, object]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> PipelineConfig:
    """
    Defaults, then VIBFUZZ_* environment variables, then the key=value file, then explicit overrides.
    """
    environ = os.environ if environ is None else environ
    raw: Dict[str, object] = {}
    for item in fields(PipelineConfig):
        value = environ.get(ENV_PREFIX + item.name.upper())
        if value is not None:
            raw[item.name] = value

    if config_file is not None:
        path = Path(config_file).expanduser()
        if not path.exists():
            raise FileNotFoundError(path)
        for key, value in dotenv_values(path).items():
            name = key.lower()
            if name.startswith(ENV_PREFIX.lower()):
                name = name[len(ENV_PREFIX):]
            raw[name] = value

    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value

    known = {item.name: item for item in fields(PipelineConfig)}
    kwargs: Dict[str, object] = {}
    for name, value in raw.items():
        if name not in known:
            raise ConfigError(f"Unknown configuration key '{name}'")
        kwargs[name] = _coerce(name, value, PipelineConfig.__dataclass_fields__[name].default)
    config = PipelineConfig(**kwargs)
    logger.debug("resolved config %s", config)
    return config


def _coerce(name: str, value: object, default: object) -> object:
    if value is None or not isinstance(value, str):
        return value
    try:
        if isinstance(default, bool):
            return value.strip().lower() in {"1", "true", "yes", "on"}
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
    except ValueError as exc:
        raise ConfigError(f"Invalid value for {name}: {value!r}") from exc
    return value.strip()
