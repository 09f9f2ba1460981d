"""Observation ingestion and result files."""
from seqeb.dataio.ingest import (
    ObservationData,
    aggregate,
    ingest,
    iter_batches,
    read_records,
    read_sites,
    validate_records,
    write_dataset,
)
from seqeb.dataio.results import (
    ResultsWriter,
    bf_path,
    prediction_frame,
    sidecar_path,
    summary_table,
    write_prediction,
    write_sidecar,
)

__all__ = [
    "ObservationData",
    "ResultsWriter",
    "aggregate",
    "bf_path",
    "ingest",
    "iter_batches",
    "prediction_frame",
    "read_records",
    "read_sites",
    "sidecar_path",
    "summary_table",
    "validate_records",
    "write_dataset",
    "write_prediction",
    "write_sidecar",
]
