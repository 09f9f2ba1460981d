"""Results, Bayes-factor and prediction files with JSON sidecars.

Results files are appended one line per step and flushed, so a partially
written file is always a valid prefix of the full run.
"""
from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Any, Optional, Sequence, Union

import pandas as pd
from rich.table import Table

from seqeb import __version__
from seqeb.orchestrator.engine import TargetPrediction
from seqeb.orchestrator.state import StepSummary
from seqeb.output import to_json_serializable


def sidecar_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_suffix(".json")


def bf_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".bf" + (path.suffix or ".csv"))


def write_sidecar(
    path: Union[str, Path],
    tag: str,
    config: Optional[dict[str, Any]] = None,
    seed: Optional[int] = None,
    extra: Optional[dict[str, Any]] = None,
) -> Path:
    """Describe the data file at ``path``: config, seed and code version."""
    meta: dict[str, Any] = {
        "file": Path(path).name,
        "tag": tag,
        "seqeb_version": __version__,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "seed": seed,
        "config": config,
    }
    if extra:
        meta.update(to_json_serializable(extra))
    target = sidecar_path(path)
    target.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return target


def _truncate(path: Path, last_t: int) -> None:
    if not path.is_file() or path.stat().st_size == 0:
        return
    lines = path.read_text(encoding="utf-8").splitlines(keepends=True)
    # rows are kept byte for byte; an unterminated last line is a torn write
    kept = lines[:1] + [
        line for line in lines[1:] if line.endswith("\n") and int(line.split(",", 1)[0]) <= last_t
    ]
    path.write_text("".join(kept), encoding="utf-8")


class ResultsWriter:
    """Streams one results row and one Bayes-factor block per step.

    With ``resume_from`` existing files are cut back to rows with
    t <= resume_from and then appended to.
    """

    def __init__(
        self,
        path: Union[str, Path],
        config: dict[str, Any],
        seed: int,
        tag: str = "online",
        resume_from: Optional[int] = None,
        extra: Optional[dict[str, Any]] = None,
    ) -> None:
        self.path = Path(path)
        self.bf_path = bf_path(self.path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if resume_from is not None:
            _truncate(self.path, resume_from)
            _truncate(self.bf_path, resume_from)
            mode = "a"
        else:
            mode = "w"
        self._fh: IO[str] = open(self.path, mode, encoding="utf-8", newline="")
        self._bf: IO[str] = open(self.bf_path, mode, encoding="utf-8", newline="")
        self._header = self.path.stat().st_size == 0
        self._bf_header = self.bf_path.stat().st_size == 0
        self.rows = 0
        write_sidecar(self.path, tag, config, seed, extra)

    def write(self, summary: StepSummary) -> None:
        pd.DataFrame([summary.row()]).to_csv(self._fh, header=self._header, index=False)
        self._fh.flush()
        self._header = False
        pd.DataFrame(summary.table.rows()).to_csv(self._bf, header=self._bf_header, index=False)
        self._bf.flush()
        self._bf_header = False
        self.rows += 1

    def __call__(self, _run: Any, summary: StepSummary) -> None:
        self.write(summary)

    def close(self) -> None:
        self._fh.close()
        self._bf.close()

    def __enter__(self) -> "ResultsWriter":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()


def prediction_frame(pred: TargetPrediction) -> pd.DataFrame:
    coords = pred.targets.coords
    frame = pd.DataFrame({"t": pred.t, "site": list(pred.targets.ids), "coord_x": coords[:, 0]})
    if coords.shape[1] > 1:
        frame["coord_y"] = coords[:, 1]
    frame["mean"] = pred.mean
    frame["sd"] = pred.sd
    frame["intensity_mean"] = pred.intensity_mean
    return frame


def write_prediction(pred: TargetPrediction, out_dir: Union[str, Path]) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"prediction_t{pred.t:04d}.csv"
    prediction_frame(pred).to_csv(path, index=False)
    return path


def summary_table(rows: Sequence[dict[str, Any]], title: str = "Estimates", limit: int = 10) -> Table:
    """Last ``limit`` results rows as a rich table."""
    table = Table(title=title, show_header=True, header_style="bold cyan")
    if not rows:
        return table
    columns = [c for c in rows[0] if c != "step_seconds"]
    for column in columns:
        table.add_column(column, justify="right")
    for row in list(rows)[-limit:]:
        table.add_row(*(f"{row[c]:.4g}" if isinstance(row[c], float) else str(row[c]) for c in columns))
    return table
