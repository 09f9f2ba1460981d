"""Offline reference sampler."""
from seqeb.baseline.mcmc import McmcResult, OfflineSampler, run_offline, sample_phi

__all__ = ["McmcResult", "OfflineSampler", "run_offline", "sample_phi"]
