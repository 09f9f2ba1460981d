# Copyright 2024-2026 The seqeb developers
# SPDX-License-Identifier: Apache-2.0

"""
Sequential empirical Bayes engine

Advances the K x L chain population one observation batch at a time:
uniform bootstrap within each coarse component, fixed-phi filter step per
chain, then a serial barrier that estimates Bayes factors over the fine
grid, picks phi and reweights the pooled chains.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional

import numpy as np

from seqeb.chain import ChainState, StepContext
from seqeb.config import EstimatorKind, RunConfig
from seqeb.eb.bayes_factor import mixture_bayes_factor, simplified_bayes_factor
from seqeb.eb.estimate import BayesFactorTable, estimate_phi, reweight_and_estimate
from seqeb.eb.reverse_logistic import reverse_logistic_fit
from seqeb.errors import ChainFailure, ContractViolation, SeqEBError
from seqeb.model import ModelSpec
from seqeb.orchestrator.rng import StreamTag, stream
from seqeb.orchestrator.state import RunState, StepSummary
from seqeb.proposal.sir import filter_step_fixed_phi
from seqeb.spatial.gaussian import mvn_sample
from seqeb.spatial.kernels import SiteSet
from seqeb.spatial.observation import ObservationBatch
from seqeb.spatial.prediction import conditional_field
from seqeb.suffstats.accumulators import PhiLikStats, Theta

logger = logging.getLogger(__name__)

StepCallback = Callable[[RunState, StepSummary], None]


@dataclass(frozen=True, eq=False)
class TargetPrediction:
    """Weighted predictive summary of the latent field at unmonitored targets."""
    t: int
    targets: SiteSet
    mean: np.ndarray
    sd: np.ndarray
    intensity_mean: np.ndarray


class SequentialEBEngine:
    """
    Online estimation engine.

    The engine holds only read-only precomputations (factorizations over the
    fine grid); all evolving state lives in the RunState it returns, so a
    failed step leaves the caller's state untouched.
    """

    def __init__(
        self,
        model: ModelSpec,
        config: RunConfig,
        workers: Optional[int] = None,
        keep_history: bool = False,
    ) -> None:
        if model.m != config.m:
            raise ContractViolation(f"model has {model.m} covariates, configuration names {config.m}")
        self.model = model
        self.config = config
        self.grid = config.grid_spec()
        self.workers = int(workers if workers is not None else config.workers)
        self.keep_history = keep_history
        self.factors = model.factorizations(self.grid.fine)
        self.whiteners = np.stack([f.whitener for f in self.factors])
        self.logdets = np.array([f.logdet for f in self.factors])
        self.on_step: list[StepCallback] = []

    @classmethod
    def for_state(cls, run: RunState, workers: Optional[int] = None, keep_history: bool = False) -> "SequentialEBEngine":
        return cls(run.model, run.config, workers=workers, keep_history=keep_history)

    def _whitened(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        G = self.model.G(t)
        return G, np.einsum("jab,bm->jam", self.whiteners, G)

    def initialize(self) -> RunState:
        """Population at t = 0: x_0 ~ N(G_0 beta, sigma2 R(phi_k)) with theta from the init block."""
        init = self.config.init
        theta = Theta(alpha=init.alpha, beta=self.config.init_beta(), sigma2=init.sigma2)
        G0, WG0 = self._whitened(0)
        mean = G0 @ theta.beta
        chains: list[ChainState] = []
        for k in range(self.grid.K):
            j = int(self.grid.coarse_index[k])
            for l in range(int(self.grid.chains[k])):  # noqa: E741
                rng = stream(self.config.seed, StreamTag.INIT, k, l, 0)
                x0 = mvn_sample(mean, theta.sigma2, self.factors[j], rng)
                x0.setflags(write=False)
                z = PhiLikStats.initial(x0, WG0, self.whiteners, self.grid.fine, self.logdets)
                chains.append(ChainState(k=k, l=l, phi_index=j, x=x0, theta=theta, z=z))
        logger.info("initialized %d chains over %d coarse values", len(chains), self.grid.K)
        return RunState(
            t=0,
            seed=self.config.seed,
            config=self.config,
            model=self.model,
            grid=self.grid,
            chains=tuple(chains),
        )

    def _context(self, batch: ObservationBatch) -> StepContext:
        G_t, WG_t = self._whitened(batch.t)
        G_prev, WG_prev = self._whitened(batch.t - 1)
        prop = self.config.proposal
        mc = self.config.monte_carlo
        return StepContext(
            batch=batch,
            G_t=G_t,
            G_prev=G_prev,
            WG_t=WG_t,
            WG_prev=WG_prev,
            factors=self.factors,
            whiteners=self.whiteners,
            prior=self.model.prior,
            family=self.model.family,
            mode=prop.mode,
            particles=mc.particles,
            gibbs_iters=mc.gibbs_iters,
            newton_tol=prop.newton_tol,
            newton_max_iter=prop.newton_max_iter,
            max_halvings=prop.max_halvings,
        )

    def _update_chain(self, run: RunState, ctx: StepContext, k: int, l: int) -> ChainState:  # noqa: E741
        t = ctx.t
        population = run.component(k)
        boot = stream(run.seed, StreamTag.BOOTSTRAP, k, l, t)
        parent = population[int(boot.integers(len(population)))]
        try:
            return filter_step_fixed_phi(ctx.batch, parent.relabel(l), ctx, stream(run.seed, StreamTag.STEP, k, l, t))
        except (SeqEBError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            raise ChainFailure(k, l, exc) from exc

    def advance(self, run: RunState, batch: ObservationBatch) -> RunState:
        """One step of the algorithm; returns a new RunState.

        Raises:
            ChainFailure: a chain update failed; ``run`` is unchanged.
        """
        started = time.perf_counter()
        if batch.t != run.t + 1:
            raise ContractViolation(f"expected observations for t={run.t + 1}, got t={batch.t}")
        if batch.n != self.model.n:
            raise ContractViolation(f"batch covers {batch.n} sites, model has {self.model.n}")
        self.model.family.validate(batch.y, batch.mask)
        ctx = self._context(batch)

        units = [(c.k, c.l) for c in run.chains]
        if self.workers > 1 and len(units) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                chains = list(pool.map(lambda kl: self._update_chain(run, ctx, *kl), units))
        else:
            chains = [self._update_chain(run, ctx, k, l) for k, l in units]

        summary, weights = self._barrier(batch.t, chains)
        summary = replace(summary, step_seconds=time.perf_counter() - started)
        history = run.history + (summary,) if self.keep_history else ()
        new = replace(
            run,
            t=batch.t,
            chains=tuple(chains),
            weights=weights,
            phi_hat=summary.phi_hat,
            history=history,
        )
        logger.debug("t=%d phi_hat=%.4f mean ESS=%.1f", batch.t, summary.phi_hat, summary.mean_ess)
        for callback in self.on_step:
            callback(new, summary)
        return new

    def _barrier(self, t: int, chains: list[ChainState]) -> tuple[StepSummary, np.ndarray]:
        grid = self.grid
        eb = self.config.eb
        loglik = np.stack([c.z.loglik(c.theta) for c in chains])
        coarse = loglik[:, grid.coarse_index]
        if eb.estimator is EstimatorKind.SIMPLIFIED or grid.K == 1:
            log_b = np.zeros(grid.K)
            log_bf = simplified_bayes_factor(loglik, loglik[:, grid.reference_fine_index])
        else:
            log_b = reverse_logistic_fit(
                coarse, grid.labels(), grid.lambdas, reference=grid.reference, tol=eb.rlr_tol
            ).log_b
            log_bf = mixture_bayes_factor(
                loglik, coarse, log_b, grid.chains, reference_index=grid.reference_fine_index
            )
        phi_hat, ci = estimate_phi(grid.fine, log_bf, eb.ci_level)
        table = BayesFactorTable(
            t=t,
            phis=grid.fine,
            log_bf=log_bf,
            coarse_phis=grid.coarse,
            coarse_log_b=log_b,
            phi_hat=phi_hat,
            ci=ci,
            level=eb.ci_level,
            flat=bool(np.ptp(log_bf) == 0.0),
        )
        est = reweight_and_estimate(
            loglik,
            grid.coarse_index,
            grid.lambdas,
            log_bf,
            table.phi_hat_index,
            np.stack([c.x for c in chains]),
            np.stack([c.theta.to_vector() for c in chains]),
            ess_floor=eb.weight_ess_floor,
        )
        summary = StepSummary(
            t=t,
            phi_hat=phi_hat,
            ci=ci,
            theta_hat=est.theta_hat,
            x_hat=est.x_hat,
            mean_ess=float(np.mean([c.last_ess for c in chains])),
            eb_ess=est.ess,
            mean_delta2=float(np.mean([c.last_delta2 for c in chains])),
            step_seconds=0.0,
            table=table,
        )
        return summary, est.weights

    def run(self, batches: Iterable[ObservationBatch], state: Optional[RunState] = None) -> RunState:
        """Advance through ``batches`` starting from ``state`` (or a fresh population)."""
        run = state if state is not None else self.initialize()
        for batch in batches:
            if batch.t <= run.t:
                continue
            run = self.advance(run, batch)
        return run

    def predict(self, run: RunState, targets: SiteSet) -> TargetPrediction:
        """Mixture of per-chain kriging distributions at phi_hat, weighted by the EB weights."""
        if run.phi_hat is None or run.weights is None:
            raise ContractViolation("prediction needs a state produced by at least one step")
        phi = float(run.phi_hat)
        fac = self.model.factorize(phi)
        G_t = self.model.G(run.t)
        G_star = self.model.design.for_sites(targets.coords)(run.t)
        means = []
        variances = []
        for chain in run.chains:
            cond = conditional_field(
                chain.x, self.model.sites, targets, chain.theta.beta, chain.theta.sigma2, phi,
                G_t, G_star, fac=fac, kernel=self.model.kernel,
            )
            means.append(cond.mean)
            variances.append(np.square(cond.sd))
        m = np.stack(means)
        v = np.stack(variances)
        w = run.weights
        mean = w @ m
        var = np.clip(w @ (v + m * m) - mean * mean, 0.0, None)
        intensity = w @ np.exp(m + 0.5 * v)
        return TargetPrediction(t=run.t, targets=targets, mean=mean, sd=np.sqrt(var), intensity_mean=intensity)
