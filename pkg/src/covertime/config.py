"""Run configuration from a flat key=value file plus command-line overrides."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ConfigError
from .rng import default_seed, parse_seed

FORMATS = ("csv", "json")
GLOBAL_KEYS = ("seed", "workers", "out", "format")


@dataclass
class RunConfig:
    seed: int = field(default_factory=default_seed)
    workers: int = 1
    output_path: str = "-"
    format: str = "csv"
    params: dict[str, str] = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed out of range: {self.seed}")
        if self.workers < 1:
            raise ConfigError(f"workers must be positive, got {self.workers}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        return self


def read_pairs(path: str | Path) -> list[tuple[int, str, str]]:
    """Parse ``key = value`` lines; blank lines and ``#`` comments are skipped."""
    pairs = []
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        pairs.append((lineno, key.replace("-", "_"), value))
    return pairs


def _apply(cfg: RunConfig, key: str, value, where: str) -> None:
    try:
        if key == "seed":
            cfg.seed = parse_seed(value)
        elif key == "workers":
            cfg.workers = int(value)
        elif key == "out":
            cfg.output_path = str(value)
        elif key == "format":
            cfg.format = str(value).lower()
        else:
            cfg.params[key] = str(value)
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key}: {value!r} ({exc})") from None


def parse_config(path: str | Path | None = None,
                 overrides: Mapping[str, object] | None = None,
                 param_keys: Iterable[str] = ()) -> RunConfig:
    """Resolve a RunConfig: defaults, then file values, then overrides.

    Override entries whose value is None are ignored, so argparse
    namespaces can be passed through directly.
    """
    valid = set(GLOBAL_KEYS) | {k.replace("-", "_") for k in param_keys}
    cfg = RunConfig()
    if path is not None:
        for lineno, key, value in read_pairs(path):
            if key not in valid:
                raise ConfigError(
                    f"{path}:{lineno}: unknown key {key!r}; valid keys: {', '.join(sorted(valid))}")
            _apply(cfg, key, value, f"{path}:{lineno}")
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        key = key.replace("-", "_")
        if key not in valid:
            raise ConfigError(f"unknown option {key!r}; valid keys: {', '.join(sorted(valid))}")
        _apply(cfg, key, value, "command line")
    return cfg.validate()
