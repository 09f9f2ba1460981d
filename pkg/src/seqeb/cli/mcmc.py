"""Offline MCMC reference run."""
from __future__ import annotations

from dataclasses import replace
from pathlib import Path
from typing import Optional

import pandas as pd
import typer
from rich.console import Console
from rich.table import Table

from seqeb.baseline.mcmc import run_offline
from seqeb.cli.common import load_run_config
from seqeb.dataio.ingest import ingest
from seqeb.dataio.results import write_sidecar
from seqeb.errors import DataError
from seqeb.model import ModelSpec
from seqeb.orchestrator.rng import StreamTag, stream

console = Console()


def mcmc_command(
    data: Path = typer.Option(..., "--data", "-d", help="Observation CSV"),
    out: Path = typer.Option(..., "--out", "-o", help="Draws CSV (latent summary goes to <out>.latent.csv)"),
    config_path: Optional[Path] = typer.Option(None, "--config", "-c", help="seqeb.toml or a simulate sidecar (.json)"),
    samples: Optional[int] = typer.Option(None, "--samples", help="Override mcmc.samples"),
    burn_in: Optional[int] = typer.Option(None, "--burn-in", help="Override mcmc.burn_in"),
    thin: Optional[int] = typer.Option(None, "--thin", help="Override mcmc.thin"),
    until: Optional[int] = typer.Option(None, "--until", help="Use only the first N days"),
) -> None:
    """Sample (theta, phi, x) given all observations with the offline smoother."""
    config = load_run_config(config_path)
    changes = {k: v for k, v in (("samples", samples), ("burn_in", burn_in), ("thin", thin)) if v is not None}
    mcmc = replace(config.mcmc, **changes)
    if not data.is_file():
        raise DataError(f"observation file not found: {data}")
    obs = ingest(data, config.model)
    T = obs.T if until is None else min(until, obs.T)
    model = ModelSpec.from_config(config, obs.sites)

    with console.status(f"[bold cyan]Sampling {mcmc.burn_in + mcmc.samples * max(mcmc.thin, 1)} iterations...[/bold cyan]"):
        result = run_offline(
            obs.y[:T], model, mcmc, stream(config.seed, StreamTag.MCMC), tau=obs.tau[:T], mask=obs.mask[:T]
        )

    out.parent.mkdir(parents=True, exist_ok=True)
    result.to_frame().to_csv(out, index=False)
    n = obs.n
    latent = pd.DataFrame(
        {
            "t": [t for t in range(T + 1) for _ in range(n)],
            "site": list(obs.sites.ids) * (T + 1),
            "x_mean": result.x_mean.ravel(),
            "x_var": result.x_var.ravel(),
        }
    )
    latent.to_csv(out.with_name(out.stem + ".latent.csv"), index=False)
    config_dict = config.to_dict()
    config_dict["mcmc"] = {**config_dict["mcmc"], **changes}
    write_sidecar(
        out,
        "offline",
        config=config_dict,
        seed=config.seed,
        extra={"T": T, "acceptance": result.acceptance, "steps": result.steps, "phi_mode": result.phi_mode()},
    )

    table = Table(title=f"Posterior summary (T={T}, {result.size} draws)", header_style="bold cyan")
    table.add_column("parameter")
    table.add_column("mean", justify="right")
    table.add_column("95% interval", justify="right")
    frame = result.to_frame().drop(columns="draw")
    for name in frame.columns:
        values = frame[name].to_numpy()
        lo, hi = result.interval(values)
        table.add_row(name, f"{values.mean():.4g}", f"[{lo:.4g}, {hi:.4g}]")
    console.print(table)
    rates = ", ".join(f"{k} {v:.2f}" for k, v in result.acceptance.items())
    console.print(f"[dim]acceptance: {rates}[/dim]")
    console.print(f"[green]✓[/green] {result.size} draws -> [cyan]{out}[/cyan]")
