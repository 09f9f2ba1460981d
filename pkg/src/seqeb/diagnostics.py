"""Turn seqeb errors into actionable messages and exit codes."""
from __future__ import annotations

import functools
import json
import logging
import sys
from typing import Any, Callable, TypeVar

import typer
from rich.console import Console

from seqeb.errors import (
    ChainFailure,
    CheckpointError,
    ConfigError,
    ConvergenceError,
    DataError,
    FactorizationError,
    SeqEBError,
)

console = Console(stderr=True)
logger = logging.getLogger(__name__)

F = TypeVar("F", bound=Callable[..., Any])

# Set by the root callback (--json-errors).
JSON_ERRORS = {"enabled": False}


def error_payload(error: BaseException) -> dict[str, Any]:
    """Machine-readable description of ``error``."""
    exit_code = getattr(error, "exit_code", 1)
    payload: dict[str, Any] = {
        "error": type(error).__name__,
        "message": str(error),
        "exit_code": exit_code,
    }
    if isinstance(error, SeqEBError):
        payload.update(error.details())
    return payload


def format_error(error: BaseException) -> str:
    """Rich-markup message with a hint for the common failure classes."""
    msg = f"[red]{type(error).__name__}:[/red] {error}"

    if isinstance(error, ConfigError):
        return (
            f"{msg}\n\n"
            "[yellow]Quick fix:[/yellow]\n"
            "Check the keys in [cyan]seqeb.toml[/cyan] (see docs/FORMATS.md for every key and default)."
        )

    elif isinstance(error, DataError):
        return (
            f"{msg}\n\n"
            "[yellow]Expected columns:[/yellow] site, day, coord_x, [coord_y], count, exposure\n"
            "Counts must be nonnegative integers; exposure must be positive wherever a count is positive."
        )

    elif isinstance(error, CheckpointError):
        return f"{msg}\n\n[yellow]The checkpoint cannot be used.[/yellow] Re-run without --resume or point at another file."

    elif isinstance(error, ChainFailure):
        cause = error.cause
        hint = ""
        if isinstance(cause, FactorizationError):
            hint = "\n  • Coincident sites make R(phi) singular: set [cyan]model.nugget[/cyan] > 0"
        elif isinstance(cause, ConvergenceError):
            hint = "\n  • Raise [cyan]proposal.newton_max_iter[/cyan] or check for extreme counts"
        return f"{msg}\n\n[yellow]The step was not applied; the previous state is intact.[/yellow]{hint}"

    return msg


def handle_errors(func: F) -> F:
    """Map SeqEBError (and friends) to an exit code and a message on stderr."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except SeqEBError as exc:
            logger.debug("command failed", exc_info=True)
            if JSON_ERRORS["enabled"]:
                sys.stderr.write(json.dumps(error_payload(exc)) + "\n")
            else:
                console.print(format_error(exc))
            raise typer.Exit(exc.exit_code) from exc

    return wrapper  # type: ignore[return-value]
