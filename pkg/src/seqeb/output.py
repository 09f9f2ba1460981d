"""Output formatting for CLI commands."""
from __future__ import annotations

import json
from dataclasses import fields, is_dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Optional

import numpy as np
from rich.console import Console
from rich.json import JSON
from rich.panel import Panel


class OutputFormat(str, Enum):
    """Supported output formats."""
    TEXT = "text"
    JSON = "json"


def to_json_serializable(obj: Any) -> Any:
    """Convert an object (dataclasses, enums, numpy values, paths) to JSON-serializable form."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_json_serializable(getattr(obj, f.name)) for f in fields(obj) if not f.name.startswith("_")}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, (list, tuple)):
        return [to_json_serializable(item) for item in obj]
    if isinstance(obj, dict):
        return {str(k): to_json_serializable(v) for k, v in obj.items()}
    return obj


def format_output(data: Any, output_format: OutputFormat = OutputFormat.TEXT) -> str:
    """Format data according to the specified output format."""
    if output_format == OutputFormat.JSON:
        return json.dumps(to_json_serializable(data), indent=2, ensure_ascii=False)
    if isinstance(data, str):
        return data
    return str(data)


def print_output(
    data: Any,
    output_format: OutputFormat = OutputFormat.TEXT,
    console: Optional[Console] = None,
    title: Optional[str] = None,
) -> None:
    """Print formatted output.

    Args:
        data: The data to output
        output_format: The desired output format
        console: Rich console for output
        title: Optional title for panel display
    """
    if console is None:
        console = Console()

    formatted = format_output(data, output_format)

    if output_format == OutputFormat.JSON:
        console.print(JSON(formatted))
    elif title:
        console.print(Panel(formatted, title=title))
    else:
        console.print(formatted)
