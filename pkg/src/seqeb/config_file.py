from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Dict, Optional

try:
    import tomllib
except ImportError:
    import tomli as tomllib  # type: ignore

from seqeb.errors import ConfigError

CONFIG_FILENAME = "seqeb.toml"


def _find_config_file() -> Optional[Path]:
    """Search for config file in cwd and parent directories, then home."""
    cwd = Path.cwd()
    for directory in [cwd, *cwd.parents]:
        candidate = directory / CONFIG_FILENAME
        if candidate.is_file():
            return candidate

    home_config = Path.home() / CONFIG_FILENAME
    if home_config.is_file():
        return home_config

    return None


def load_config_file(path: Optional[Path] = None) -> Dict[str, Any]:
    """Parse ``path`` (or the discovered seqeb.toml); empty dict when none exists."""
    if path is None:
        path = _find_config_file()
        if path is None:
            return {}
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"Config file {path} is not valid TOML: {exc}") from exc


def get_config_value(data: Dict[str, Any], key: str, env_var: Optional[str] = None, default: Any = None) -> Any:
    """
    Get a config value with precedence: env var > config file > default.

    Key should be dot-separated for nested access, e.g. "proposal.mode".
    Environment values are returned as stripped strings.
    """
    if env_var:
        env_value = os.getenv(env_var)
        if env_value and env_value.strip():
            return env_value.strip()

    value: Any = data
    for part in key.split("."):
        if isinstance(value, dict):
            value = value.get(part)
        else:
            value = None
            break

    return default if value is None else value
