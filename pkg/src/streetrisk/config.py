"""Run configuration: plain ``key = value`` files, one setting per line.

Blank lines and lines starting with ``#`` are ignored.  Unknown keys are an
error so typos surface instead of silently using a default.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path


@dataclass
class RunConfig:
    accidents: str = ""
    scenes: str = ""
    nodes: str = ""
    edges: str = ""
    network_geojson: str = ""
    neighborhoods: str = ""
    radius_m: float = 50.0
    tolerance: float = 0.05
    hex_size: float = 0.05
    lambda_m: float = 500.0
    snap_radius_m: float = 25.0
    learning_rate: float = 0.1
    epochs: int = 500
    l2: float = 1e-4
    total_trips: float = 1.0
    threads: int = 1
    seed: int = 0
    out_dir: str = "out"

    def __post_init__(self):
        for name in ("radius_m", "hex_size", "lambda_m", "snap_radius_m", "learning_rate", "total_trips"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.tolerance < 0:
            raise ValueError("tolerance must be nonnegative")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.l2 < 0:
            raise ValueError("l2 must be nonnegative")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_value(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def load_config(path) -> RunConfig:
    """Parse a key = value file into a RunConfig."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected key = value, got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ValueError(f"{path}:{lineno}: unknown setting {key!r}")
        if key in values:
            raise ValueError(f"{path}:{lineno}: duplicate setting {key!r}")
        try:
            values[key] = _parse_value(key, raw.strip())
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
    return RunConfig(**values)


def save_config(config: RunConfig, path) -> None:
    """Write the configuration so load_config reads back an equal object."""
    lines = [f"{f.name} = {getattr(config, f.name)}" for f in fields(RunConfig)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
