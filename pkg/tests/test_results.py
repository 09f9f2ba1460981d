"""Tests for results, Bayes-factor and prediction files."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd

from seqeb import __version__
from seqeb.config import RunConfig
from seqeb.dataio.results import (
    ResultsWriter,
    bf_path,
    prediction_frame,
    sidecar_path,
    summary_table,
    write_prediction,
)
from seqeb.model import ModelSpec
from seqeb.orchestrator.engine import SequentialEBEngine, TargetPrediction
from seqeb.simkit.simulate import SimulatedData
from seqeb.spatial.kernels import SiteSet


def _write_run(path: Path, config: RunConfig, data: SimulatedData, steps: int) -> ResultsWriter:
    engine = SequentialEBEngine(ModelSpec.from_config(config, data.sites), config)
    with ResultsWriter(path, config.to_dict(), config.seed) as writer:
        engine.on_step.append(writer)
        engine.run(list(data.batches())[:steps])
    return writer


class TestPaths:
    """Test derived file names."""

    def test_names(self, tmp_path: Path) -> None:
        """Test the Bayes-factor and sidecar names next to a results file."""
        path = tmp_path / "run.csv"
        assert bf_path(path) == tmp_path / "run.bf.csv"
        assert sidecar_path(path) == tmp_path / "run.json"


class TestResultsWriter:
    """Test streaming result files."""

    def test_rows_per_step(self, tmp_path: Path, tiny_config: RunConfig, tiny_data: SimulatedData) -> None:
        """Test one results row and one Bayes-factor block per step."""
        path = tmp_path / "out" / "run.csv"
        writer = _write_run(path, tiny_config, tiny_data, 3)

        assert writer.rows == 3
        results = pd.read_csv(path)
        assert results["t"].tolist() == [1, 2, 3]
        assert list(results.columns)[:3] == ["t", "alpha", "beta_0"]
        bf = pd.read_csv(bf_path(path))
        assert len(bf) == 3 * 7
        assert bf.groupby("t")["coarse"].sum().tolist() == [2, 2, 2]

    def test_sidecar(self, tmp_path: Path, tiny_config: RunConfig, tiny_data: SimulatedData) -> None:
        """Test that the sidecar records config, seed and version."""
        path = tmp_path / "run.csv"
        _write_run(path, tiny_config, tiny_data, 1)

        meta = json.loads(sidecar_path(path).read_text(encoding="utf-8"))
        assert meta["seed"] == 7
        assert meta["seqeb_version"] == __version__
        assert meta["tag"] == "online"
        assert meta["config"]["grid"]["coarse"] == [0.3, 0.5]

    def test_resume_truncates(self, tmp_path: Path, tiny_config: RunConfig) -> None:
        """Test that resuming keeps rows up to the checkpoint byte for byte and drops a torn line."""
        path = tmp_path / "run.csv"
        path.write_text("t,alpha\n1,0.123456789012345\n2,0.5\n3,0.7\n4,0.", encoding="utf-8")
        bf_path(path).write_text("t,phi,log_bf,coarse\n1,0.2,0.0,1\n3,0.2,0.1,1\n", encoding="utf-8")

        writer = ResultsWriter(path, tiny_config.to_dict(), 7, resume_from=2)
        writer.close()

        assert path.read_text(encoding="utf-8") == "t,alpha\n1,0.123456789012345\n2,0.5\n"
        assert bf_path(path).read_text(encoding="utf-8") == "t,phi,log_bf,coarse\n1,0.2,0.0,1\n"

    def test_resume_appends(self, tmp_path: Path, tiny_config: RunConfig, tiny_data: SimulatedData) -> None:
        """Test that a resumed writer appends without a second header."""
        path = tmp_path / "run.csv"
        _write_run(path, tiny_config, tiny_data, 2)
        engine = SequentialEBEngine(ModelSpec.from_config(tiny_config, tiny_data.sites), tiny_config)
        with ResultsWriter(path, tiny_config.to_dict(), 7, resume_from=1) as writer:
            first = engine.run(list(tiny_data.batches())[:1])
            engine.on_step.append(writer)
            engine.run(list(tiny_data.batches())[:3], first)

        assert pd.read_csv(path)["t"].tolist() == [1, 2, 3]


class TestPrediction:
    """Test prediction files."""

    def _prediction(self) -> TargetPrediction:
        targets = SiteSet(np.array([[0.0, 0.0], [1.0, 2.0]]), ("p", "q"))
        return TargetPrediction(
            t=4,
            targets=targets,
            mean=np.array([0.5, 1.0]),
            sd=np.array([0.1, 0.2]),
            intensity_mean=np.array([1.7, 2.8]),
        )

    def test_frame(self) -> None:
        """Test the prediction columns for planar targets."""
        frame = prediction_frame(self._prediction())

        assert list(frame.columns) == ["t", "site", "coord_x", "coord_y", "mean", "sd", "intensity_mean"]
        assert frame["site"].tolist() == ["p", "q"]
        assert frame["t"].tolist() == [4, 4]

    def test_write(self, tmp_path: Path) -> None:
        """Test the prediction file name."""
        path = write_prediction(self._prediction(), tmp_path / "pred")
        assert path.name == "prediction_t0004.csv"
        assert len(pd.read_csv(path)) == 2


class TestSummaryTable:
    """Test the console table."""

    def test_last_rows(self) -> None:
        """Test that only the last rows are shown and timing is hidden."""
        rows = [{"t": t, "phi": 0.1 * t, "step_seconds": 0.01} for t in range(1, 16)]

        table = summary_table(rows, limit=5)

        assert table.row_count == 5
        assert [c.header for c in table.columns] == ["t", "phi"]

    def test_empty(self) -> None:
        """Test an empty table."""
        assert summary_table([]).row_count == 0
