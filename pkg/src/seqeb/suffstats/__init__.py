"""Recursive sufficient statistics and conjugate Gibbs updates."""
from seqeb.suffstats.accumulators import (
    PhiLikStats,
    StatBlocks,
    TemporalSuffStats,
    Theta,
    init_stats,
    joint_state_loglik,
    path_stats,
    stat_size,
    update_stats,
)
from seqeb.suffstats.conditionals import (
    GaussianConditional,
    InverseGammaConditional,
    PriorHyper,
    alpha_full_conditional,
    beta_full_conditional,
    gibbs_sweep,
    sigma2_full_conditional,
)

__all__ = [
    "GaussianConditional",
    "InverseGammaConditional",
    "PhiLikStats",
    "PriorHyper",
    "StatBlocks",
    "TemporalSuffStats",
    "Theta",
    "alpha_full_conditional",
    "beta_full_conditional",
    "gibbs_sweep",
    "init_stats",
    "joint_state_loglik",
    "path_stats",
    "sigma2_full_conditional",
    "stat_size",
    "update_stats",
]
