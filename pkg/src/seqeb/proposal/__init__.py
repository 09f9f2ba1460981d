"""Laplace/skew-normal proposals and the single-chain SIR step."""
from seqeb.proposal.fit import (
    ProposalFit,
    ProposalMode,
    SkewMarginals,
    build_proposal,
    fit_skew_marginals,
    proposal_logpdf,
    sample_proposal,
)
from seqeb.proposal.laplace import LaplaceFit, fit_mode, optimal_proposal_logdensity, transition_mean

__all__ = [
    "LaplaceFit",
    "ProposalFit",
    "ProposalMode",
    "SkewMarginals",
    "build_proposal",
    "fit_mode",
    "fit_skew_marginals",
    "optimal_proposal_logdensity",
    "proposal_logpdf",
    "sample_proposal",
    "transition_mean",
]
