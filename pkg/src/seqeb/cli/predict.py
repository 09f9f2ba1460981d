"""Kriging predictions at unmonitored targets from filter snapshots."""
from __future__ import annotations

from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.table import Table

from seqeb.cli.common import parse_times
from seqeb.dataio.ingest import read_sites
from seqeb.dataio.results import write_prediction, write_sidecar
from seqeb.errors import CheckpointError
from seqeb.orchestrator.checkpoint import load_checkpoint, snapshot_path
from seqeb.orchestrator.engine import SequentialEBEngine

console = Console()


def _snapshot_times(run_dir: Path) -> list[int]:
    return sorted(int(p.stem.split("_t")[-1]) for p in run_dir.glob("state_t*.ckpt"))


def predict_command(
    run_dir: Path = typer.Option(..., "--run", "-r", help="Snapshot directory written by filter --snapshot-times"),
    targets: Path = typer.Option(..., "--targets", help="Target site CSV (site, coord_x[, coord_y])"),
    out: Path = typer.Option(..., "--out", "-o", help="Output directory for prediction_tNNNN.csv files"),
    times: Optional[str] = typer.Option(None, "--times", help="Comma-separated time steps (default: every snapshot)"),
) -> None:
    """Predict the latent field at target sites for the requested days."""
    wanted = parse_times(times) or _snapshot_times(run_dir)
    if not wanted:
        raise CheckpointError(f"no snapshots found in {run_dir}")
    target_sites = read_sites(targets)

    table = Table(title=f"Predictions at {target_sites.n} targets", header_style="bold cyan")
    for column in ("t", "phi_hat", "mean range", "max sd", "file"):
        table.add_column(column, justify="right")
    for t in wanted:
        run = load_checkpoint(snapshot_path(run_dir, t))
        pred = SequentialEBEngine.for_state(run).predict(run, target_sites)
        path = write_prediction(pred, out)
        write_sidecar(path, "prediction", config=run.config.to_dict(), seed=run.seed, extra={"t": t, "phi_hat": run.phi_hat})
        table.add_row(
            str(t),
            f"{run.phi_hat:.4f}",
            f"[{pred.mean.min():.3g}, {pred.mean.max():.3g}]",
            f"{pred.sd.max():.3g}",
            path.name,
        )
    console.print(table)
