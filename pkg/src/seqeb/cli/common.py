"""Option parsing shared by the CLI commands."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from seqeb.config import RunConfig, load_config
from seqeb.errors import ConfigError


def parse_int_list(text: Optional[str], what: str = "value", minimum: int = 0) -> list[int]:
    """``"10,40,146"`` -> ``[10, 40, 146]`` (sorted, unique)."""
    if not text:
        return []
    try:
        values = sorted({int(part) for part in text.split(",") if part.strip()})
    except ValueError as exc:
        raise ConfigError(f"invalid {what} list '{text}': expected comma-separated integers") from exc
    if any(v < minimum for v in values):
        raise ConfigError(f"invalid {what} list '{text}': values must be >= {minimum}")
    return values


def parse_times(text: Optional[str]) -> list[int]:
    return parse_int_list(text, "time", 1)


def load_run_config(path: Optional[Path]) -> RunConfig:
    """TOML config file, or the ``config`` block of a JSON sidecar written by ``simulate``."""
    if path is not None and path.suffix.lower() == ".json":
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config sidecar {path}: {exc}") from exc
        return RunConfig.from_dict(data.get("config") or {}, env=True)
    return load_config(path)
