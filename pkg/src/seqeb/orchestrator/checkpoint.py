"""Versioned, checksummed binary checkpoints of a RunState.

Layout: 8-byte magic, uint32 format version, 32-byte SHA-256 of the payload,
uint64 payload length, then an uncompressed ``.npz`` payload holding the
chain arrays and the run configuration as JSON. Random streams are derived
from (seed, k, l, t), so no generator state is stored.
"""
from __future__ import annotations

import hashlib
import io
import json
import struct
from pathlib import Path
from typing import Union

import numpy as np

from seqeb import __version__
from seqeb.chain import ChainState
from seqeb.config import RunConfig
from seqeb.errors import CheckpointError, ConfigError
from seqeb.model import ModelSpec
from seqeb.orchestrator.state import RunState
from seqeb.spatial.kernels import SiteSet
from seqeb.suffstats.accumulators import PhiLikStats, Theta

MAGIC = b"SEQEBCK\0"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sI32sQ")


def checkpoint(run: RunState) -> bytes:
    """Serialize ``run`` (history excluded) to a self-contained blob."""
    chains = run.chains
    meta = {
        "t": run.t,
        "seed": run.seed,
        "config": run.config.to_dict(),
        "site_ids": list(run.model.sites.ids),
        "phi_hat": run.phi_hat,
        "seqeb_version": __version__,
    }
    arrays = {
        "meta": np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8),
        "coords": np.asarray(run.model.sites.coords),
        "k": np.array([c.k for c in chains], dtype=np.int64),
        "l": np.array([c.l for c in chains], dtype=np.int64),
        "phi_index": np.array([c.phi_index for c in chains], dtype=np.int64),
        "x": np.stack([c.x for c in chains]),
        "theta": np.stack([c.theta.to_vector() for c in chains]),
        "sums": np.stack([c.z.sums for c in chains]),
        "comp": np.stack([c.z.comp for c in chains]),
        "z_t": np.array([c.z.t for c in chains], dtype=np.int64),
        "phis": np.asarray(chains[0].z.phis),
        "logdets": np.asarray(chains[0].z.logdets),
        "last_ess": np.array([c.last_ess for c in chains]),
        "last_delta2": np.array([c.last_delta2 for c in chains]),
        "weights": np.zeros(0) if run.weights is None else np.asarray(run.weights),
    }
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    payload = buf.getvalue()
    digest = hashlib.sha256(payload).digest()
    return _HEADER.pack(MAGIC, FORMAT_VERSION, digest, len(payload)) + payload


def restore(blob: bytes) -> RunState:
    """Rebuild a RunState from :func:`checkpoint` output.

    Raises:
        CheckpointError: wrong magic or version, truncation, checksum mismatch
            or an unreadable payload.
    """
    if len(blob) < _HEADER.size:
        raise CheckpointError("checkpoint is truncated (header incomplete)")
    magic, version, digest, length = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointError("not a seqeb checkpoint")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"checkpoint format version {version} is not supported (expected {FORMAT_VERSION})")
    payload = blob[_HEADER.size :]
    if len(payload) != length:
        raise CheckpointError(f"checkpoint is truncated ({len(payload)} of {length} payload bytes)")
    if hashlib.sha256(payload).digest() != digest:
        raise CheckpointError("checkpoint checksum mismatch")

    try:
        with np.load(io.BytesIO(payload), allow_pickle=False) as data:
            arrays = {name: data[name] for name in data.files}
        meta = json.loads(arrays["meta"].tobytes().decode("utf-8"))
        config = RunConfig.from_dict(meta["config"])
    except ConfigError as exc:
        raise CheckpointError(f"checkpoint configuration is invalid: {exc}") from exc
    except (KeyError, ValueError, OSError) as exc:
        raise CheckpointError(f"checkpoint payload is unreadable: {exc}") from exc

    sites = SiteSet(arrays["coords"], tuple(meta["site_ids"]))
    model = ModelSpec.from_config(config, sites)
    m = model.m
    phis = arrays["phis"]
    logdets = arrays["logdets"]
    phis.setflags(write=False)
    logdets.setflags(write=False)
    chains = []
    for i in range(arrays["k"].shape[0]):
        x = arrays["x"][i].copy()
        x.setflags(write=False)
        z = PhiLikStats._frozen(
            phis, logdets, int(arrays["z_t"][i]), sites.n, m, arrays["sums"][i].copy(), arrays["comp"][i].copy()
        )
        chains.append(
            ChainState(
                k=int(arrays["k"][i]),
                l=int(arrays["l"][i]),
                phi_index=int(arrays["phi_index"][i]),
                x=x,
                theta=Theta.from_vector(arrays["theta"][i]),
                z=z,
                last_ess=float(arrays["last_ess"][i]),
                last_delta2=float(arrays["last_delta2"][i]),
            )
        )
    weights = arrays["weights"] if arrays["weights"].size else None
    return RunState(
        t=int(meta["t"]),
        seed=int(meta["seed"]),
        config=config,
        model=model,
        grid=config.grid_spec(),
        chains=tuple(chains),
        weights=weights,
        phi_hat=meta["phi_hat"],
    )


def save_checkpoint(run: RunState, path: Union[str, Path]) -> Path:
    """Write atomically through a temporary sibling file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(checkpoint(run))
    tmp.replace(path)
    return path


def load_checkpoint(path: Union[str, Path]) -> RunState:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    return restore(path.read_bytes())


def snapshot_path(directory: Union[str, Path], t: int) -> Path:
    """Per-time snapshot file written by ``filter --snapshot-times``."""
    return Path(directory) / f"state_t{t:04d}.ckpt"
