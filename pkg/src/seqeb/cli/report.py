"""Replicated simulation studies."""
from __future__ import annotations

from dataclasses import replace
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.table import Table

from seqeb.cli.common import parse_int_list
from seqeb.simkit.studies import STUDIES, default_scale, replicate_study

console = Console()


def report_command(
    study: str = typer.Option(..., "--study", "-s", help=f"One of: {', '.join(STUDIES)}"),
    out: Path = typer.Option(Path("reports"), "--out", "-o", help="Output directory"),
    full: bool = typer.Option(False, "--full", help="Full-size replication counts and Monte Carlo sizes"),
    seeds: Optional[str] = typer.Option(None, "--seeds", help="Comma-separated replication seeds"),
    replications: Optional[int] = typer.Option(None, "--replications", "-n", help="Override the replication count"),
    steps: Optional[int] = typer.Option(None, "--steps", "-T", help="Override the number of days"),
    workers: int = typer.Option(1, "--workers", "-w", help="Replications run concurrently"),
) -> None:
    """Run a study and write its tables as CSV files with JSON sidecars."""
    scale = default_scale(study, full)
    if replications is not None:
        scale = replace(scale, replications=replications)
    if steps is not None:
        scale = replace(scale, T=steps)
    seed_list = parse_int_list(seeds, "seed") or None

    with console.status(f"[bold cyan]Running {study}...[/bold cyan]"):
        report = replicate_study(study, seeds=seed_list, out_dir=out, workers=workers, scale=scale)

    table = Table(title=f"{study} ({len(report.seeds)} replications)", header_style="bold cyan")
    table.add_column("table")
    table.add_column("rows", justify="right")
    table.add_column("file")
    for (name, frame), path in zip(report.tables.items(), report.paths):
        table.add_row(name, str(len(frame)), str(path))
    console.print(table)
