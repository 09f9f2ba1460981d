"""Online filtering over an observation file or stdin stream."""
from __future__ import annotations

import logging
import sys
from collections import deque
from pathlib import Path
from typing import Iterator, Optional

import typer
from rich.console import Console

from seqeb.cli.common import load_run_config, parse_times
from seqeb.config import RunConfig
from seqeb.dataio.ingest import ingest, iter_batches, read_sites
from seqeb.dataio.results import ResultsWriter, summary_table
from seqeb.errors import ConfigError, DataError
from seqeb.model import ModelSpec
from seqeb.orchestrator.checkpoint import load_checkpoint, save_checkpoint, snapshot_path
from seqeb.orchestrator.engine import SequentialEBEngine
from seqeb.orchestrator.state import RunState, StepSummary
from seqeb.spatial.kernels import SiteSet
from seqeb.spatial.observation import ObservationBatch

console = Console()
logger = logging.getLogger(__name__)


def _source(data: str, sites_path: Optional[Path], config: RunConfig) -> tuple[SiteSet, Iterator[ObservationBatch]]:
    if data == "-":
        if sites_path is None:
            raise ConfigError("--sites is required when reading observations from stdin")
        sites = read_sites(sites_path)
        return sites, iter_batches(sys.stdin, sites)
    path = Path(data)
    if not path.is_file():
        raise DataError(f"observation file not found: {path}")
    obs = ingest(path, config.model)
    if sites_path is not None:
        wanted = read_sites(sites_path)
        if wanted.ids != obs.sites.ids:
            raise DataError(f"{sites_path} lists other sites than {path}")
    return obs.sites, obs.batches()


def filter_command(
    data: str = typer.Option(..., "--data", "-d", help="Observation CSV, or '-' for stdin (needs --sites)"),
    out: Path = typer.Option(..., "--out", "-o", help="Results CSV (Bayes factors go to <out>.bf.csv)"),
    config_path: Optional[Path] = typer.Option(None, "--config", "-c", help="seqeb.toml or a simulate sidecar (.json)"),
    sites_path: Optional[Path] = typer.Option(None, "--sites", help="Site list CSV (site, coord_x[, coord_y])"),
    checkpoint_path: Optional[Path] = typer.Option(None, "--checkpoint", help="Checkpoint file to write"),
    checkpoint_every: int = typer.Option(10, "--checkpoint-every", help="Write the checkpoint every N steps"),
    resume: bool = typer.Option(False, "--resume", help="Continue from --checkpoint"),
    snapshot_times: Optional[str] = typer.Option(None, "--snapshot-times", help="Comma-separated time steps (day - first day + 1) to snapshot for predict"),
    snapshot_dir: Optional[Path] = typer.Option(None, "--snapshot-dir", help="Snapshot directory (default: next to --out)"),
    until: Optional[int] = typer.Option(None, "--until", help="Stop after this step"),
    workers: Optional[int] = typer.Option(None, "--workers", "-w", help="Threads for chain updates"),
) -> None:
    """Run the sequential EB filter, one results row per calendar day from the first observed day."""
    if resume and checkpoint_path is None:
        raise ConfigError("--resume needs --checkpoint")
    if checkpoint_every < 1:
        raise ConfigError("--checkpoint-every must be >= 1")
    snapshots = set(parse_times(snapshot_times))
    snap_dir = snapshot_dir or out.parent / f"{out.stem}_snapshots"

    if resume:
        run: Optional[RunState] = load_checkpoint(checkpoint_path)  # type: ignore[arg-type]
        config = run.config
        console.print(f"[dim]Resuming from t={run.t}[/dim]")
    else:
        run = None
        config = load_run_config(config_path)

    sites, batches = _source(data, sites_path, config)
    if run is not None:
        if run.model.sites.ids != sites.ids:
            raise DataError("observation sites differ from the checkpointed run")
        engine = SequentialEBEngine.for_state(run, workers=workers)
    else:
        model = ModelSpec.from_config(config, sites)
        engine = SequentialEBEngine(model, config, workers=workers)
        run = engine.initialize()

    recent: deque[dict] = deque(maxlen=10)

    def persist(state: RunState, summary: StepSummary) -> None:
        recent.append(summary.row())
        if checkpoint_path is not None and state.t % checkpoint_every == 0:
            save_checkpoint(state, checkpoint_path)
        if state.t in snapshots:
            save_checkpoint(state, snapshot_path(snap_dir, state.t))

    with ResultsWriter(out, config.to_dict(), config.seed, resume_from=run.t if resume else None) as writer:
        engine.on_step.extend([writer, persist])
        with console.status("[bold cyan]Filtering...[/bold cyan]") as status:
            for batch in batches:
                if batch.t <= run.t:
                    continue
                if until is not None and batch.t > until:
                    break
                run = engine.advance(run, batch)
                status.update(f"[bold cyan]Filtering...[/bold cyan] t={run.t} phi={run.phi_hat:.4f}")
        steps = writer.rows

    if checkpoint_path is not None:
        save_checkpoint(run, checkpoint_path)
    missing = sorted(t for t in snapshots if t > run.t)
    if missing:
        logger.warning("no data reached snapshot times %s", missing)

    console.print(summary_table(list(recent), title=f"Last steps (t={run.t})"))
    console.print(f"[green]✓[/green] {steps} steps -> [cyan]{out}[/cyan]")
