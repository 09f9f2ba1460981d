"""Importance weighting, single-index selection and the fixed-phi filter step."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from seqeb.chain import ChainState, StepContext
from seqeb.errors import DegenerateProposalError
from seqeb.proposal.fit import ProposalFit, build_proposal, mean_delta2, proposal_logpdf, sample_proposal
from seqeb.proposal.laplace import fit_mode, transition_mean
from seqeb.spatial.gaussian import GaussianFactorization, mvn_logpdf
from seqeb.spatial.observation import ObservationBatch, ObservationFamily, batch_loglik
from seqeb.suffstats.conditionals import gibbs_sweep


def effective_sample_size(log_weights: np.ndarray) -> float:
    """(sum w)^2 / sum w^2 computed from log-weights."""
    lw = np.asarray(log_weights, dtype=float)
    finite = np.isfinite(lw)
    if not finite.any():
        raise DegenerateProposalError("all importance weights are zero")
    return float(np.exp(2.0 * logsumexp(lw[finite]) - logsumexp(2.0 * lw[finite])))


@dataclass(frozen=True, eq=False)
class WeightedParticles:
    """Proposal particles with unnormalized log-weights."""
    particles: np.ndarray
    log_weights: np.ndarray
    ess: float

    @property
    def N(self) -> int:
        return int(self.particles.shape[0])

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights - logsumexp(self.log_weights))


def importance_weights(
    particles: np.ndarray,
    batch: ObservationBatch,
    mu: np.ndarray,
    sigma2: float,
    fac: GaussianFactorization,
    fit: ProposalFit,
    family: ObservationFamily,
) -> WeightedParticles:
    """log w = log p(y|x) + log p(x|x_{t-1}, theta, phi) - log q(x)."""
    lw = (
        np.asarray(batch_loglik(batch, particles, family))
        + np.asarray(mvn_logpdf(particles, mu, sigma2, fac))
        - np.asarray(proposal_logpdf(fit, particles))
    )
    lw = np.where(np.isnan(lw), -np.inf, lw)
    return WeightedParticles(particles=particles, log_weights=lw, ess=effective_sample_size(lw))


def weigh_and_resample(
    particles: np.ndarray,
    batch: ObservationBatch,
    mu: np.ndarray,
    sigma2: float,
    fac: GaussianFactorization,
    fit: ProposalFit,
    family: ObservationFamily,
    rng: np.random.Generator,
) -> tuple[np.ndarray, float]:
    """Weigh the particles and keep one by a categorical draw."""
    weighted = importance_weights(particles, batch, mu, sigma2, fac, fit, family)
    j = int(rng.choice(weighted.N, p=weighted.weights))
    return particles[j].copy(), weighted.ess


def filter_step_fixed_phi(batch: ObservationBatch, chain: ChainState, ctx: StepContext, rng: np.random.Generator) -> ChainState:
    """One step of the chain at its own phi: Gibbs for theta, SIR for x_t, statistics update."""
    theta = gibbs_sweep(chain.u, chain.theta, ctx.prior, ctx.gibbs_iters, rng)
    fac = ctx.factors[chain.phi_index]
    laplace = fit_mode(
        batch, chain.x, theta, fac, ctx.family, ctx.G_t, ctx.G_prev,
        tol=ctx.newton_tol, max_iter=ctx.newton_max_iter, max_halvings=ctx.max_halvings,
    )
    fit = build_proposal(laplace, batch, ctx.family, ctx.mode)
    particles = sample_proposal(fit, ctx.particles, rng)
    mu = transition_mean(chain.x, theta, ctx.G_t, ctx.G_prev)
    x_t, ess = weigh_and_resample(particles, batch, mu, theta.sigma2, fac, fit, ctx.family, rng)
    z = chain.z.updated(x_t, chain.x, ctx.WG_t, ctx.WG_prev, ctx.whiteners)
    x_t.setflags(write=False)
    return ChainState(
        k=chain.k,
        l=chain.l,
        phi_index=chain.phi_index,
        x=x_t,
        theta=theta,
        z=z,
        last_ess=ess,
        last_delta2=mean_delta2(fit),
    )
