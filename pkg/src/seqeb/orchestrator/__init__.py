"""Chain population management, per-step barrier and checkpoints."""
from seqeb.orchestrator.checkpoint import checkpoint, load_checkpoint, restore, save_checkpoint, snapshot_path
from seqeb.orchestrator.engine import SequentialEBEngine, TargetPrediction
from seqeb.orchestrator.rng import StreamTag, stream
from seqeb.orchestrator.state import RunState, StepSummary

__all__ = [
    "RunState",
    "SequentialEBEngine",
    "StepSummary",
    "StreamTag",
    "TargetPrediction",
    "checkpoint",
    "load_checkpoint",
    "restore",
    "save_checkpoint",
    "snapshot_path",
]
