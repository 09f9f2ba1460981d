"""Tests for checkpoint serialization and resume."""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import pytest

from seqeb.config import RunConfig
from seqeb.errors import CheckpointError
from seqeb.model import ModelSpec
from seqeb.orchestrator.checkpoint import (
    MAGIC,
    checkpoint,
    load_checkpoint,
    restore,
    save_checkpoint,
    snapshot_path,
)
from seqeb.orchestrator.engine import SequentialEBEngine
from seqeb.orchestrator.state import RunState
from seqeb.simkit.simulate import SimulatedData


@pytest.fixture
def stepped(tiny_config: RunConfig, tiny_data: SimulatedData) -> RunState:
    """State after five steps of the tiny data."""
    engine = SequentialEBEngine(ModelSpec.from_config(tiny_config, tiny_data.sites), tiny_config, keep_history=True)
    return engine.run(list(tiny_data.batches())[:5])


class TestRoundTrip:
    """Test checkpoint / restore."""

    def test_restores_every_field(self, stepped: RunState) -> None:
        """Test that the restored state matches the original exactly."""
        again = restore(checkpoint(stepped))

        assert again.t == stepped.t == 5
        assert again.seed == stepped.seed
        assert again.phi_hat == stepped.phi_hat
        assert again.config.to_dict() == stepped.config.to_dict()
        assert again.model.sites.ids == stepped.model.sites.ids
        assert np.array_equal(again.weights, stepped.weights)
        assert np.array_equal(again.xs(), stepped.xs())
        assert np.array_equal(again.thetas(), stepped.thetas())
        for a, b in zip(again.chains, stepped.chains):
            assert (a.k, a.l, a.phi_index) == (b.k, b.l, b.phi_index)
            assert np.array_equal(a.z.sums, b.z.sums)
            assert np.array_equal(a.z.comp, b.z.comp)
            assert a.z.t == b.z.t
            assert a.last_ess == b.last_ess

    def test_history_not_stored(self, stepped: RunState) -> None:
        """Test that checkpoints carry working state only."""
        assert len(stepped.history) == 5
        assert restore(checkpoint(stepped)).history == ()

    def test_fresh_population(self, tiny_model: ModelSpec, tiny_config: RunConfig) -> None:
        """Test a state without weights."""
        run = SequentialEBEngine(tiny_model, tiny_config).initialize()
        again = restore(checkpoint(run))

        assert again.weights is None
        assert again.phi_hat is None
        assert np.array_equal(again.xs(), run.xs())


class TestCorruption:
    """Test rejection of damaged blobs."""

    def test_truncated_header(self, stepped: RunState) -> None:
        """Test a blob shorter than the header."""
        with pytest.raises(CheckpointError, match="truncated"):
            restore(checkpoint(stepped)[:20])

    def test_truncated_payload(self, stepped: RunState) -> None:
        """Test a blob cut inside the payload."""
        blob = checkpoint(stepped)
        with pytest.raises(CheckpointError, match="truncated"):
            restore(blob[:-10])

    def test_bad_magic(self, stepped: RunState) -> None:
        """Test a blob that is not a checkpoint."""
        blob = b"NOTACKPT" + checkpoint(stepped)[len(MAGIC):]
        with pytest.raises(CheckpointError, match="not a seqeb checkpoint"):
            restore(blob)

    def test_unsupported_version(self, stepped: RunState) -> None:
        """Test a checkpoint written by a newer format."""
        blob = bytearray(checkpoint(stepped))
        struct.pack_into("<I", blob, len(MAGIC), 99)
        with pytest.raises(CheckpointError, match="version 99"):
            restore(bytes(blob))

    def test_checksum(self, stepped: RunState) -> None:
        """Test that a flipped payload byte is detected."""
        blob = bytearray(checkpoint(stepped))
        blob[-100] ^= 0xFF
        with pytest.raises(CheckpointError, match="checksum"):
            restore(bytes(blob))


class TestFiles:
    """Test saving and loading files."""

    def test_save_and_load(self, stepped: RunState, tmp_path: Path) -> None:
        """Test the atomic write leaves only the final file."""
        path = save_checkpoint(stepped, tmp_path / "nested" / "state.ckpt")

        assert path.is_file()
        assert not path.with_suffix(".ckpt.tmp").exists()
        assert np.array_equal(load_checkpoint(path).xs(), stepped.xs())

    def test_missing_file(self, tmp_path: Path) -> None:
        """Test a missing checkpoint path."""
        with pytest.raises(CheckpointError, match="not found"):
            load_checkpoint(tmp_path / "absent.ckpt")

    def test_snapshot_path(self, tmp_path: Path) -> None:
        """Test snapshot naming."""
        assert snapshot_path(tmp_path, 7) == tmp_path / "state_t0007.ckpt"


class TestResume:
    """Test that resuming from a checkpoint is bitwise identical to a straight run."""

    def test_bitwise_resume(self, stepped: RunState, tiny_config: RunConfig, tiny_data: SimulatedData, tmp_path: Path) -> None:
        """Test resume at t = 5 against an uninterrupted run to t = 12."""
        batches = list(tiny_data.batches())
        straight_engine = SequentialEBEngine(ModelSpec.from_config(tiny_config, tiny_data.sites), tiny_config)
        straight = straight_engine.run(batches)

        path = save_checkpoint(stepped, tmp_path / "state.ckpt")
        resumed_state = load_checkpoint(path)
        resumed = SequentialEBEngine.for_state(resumed_state).run(batches, resumed_state)

        assert resumed.t == straight.t == 12
        assert resumed.phi_hat == straight.phi_hat
        assert np.array_equal(resumed.xs(), straight.xs())
        assert np.array_equal(resumed.thetas(), straight.thetas())
        assert np.array_equal(resumed.weights, straight.weights)
