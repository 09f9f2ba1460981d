"""Offline MCMC smoother used as a reference for the online engine.

Systematic scan per iteration: Gibbs draws of beta, alpha and sigma2 from
the full-history conditionals, random-walk Metropolis on log phi with an
exponential prior, then single-site random-walk Metropolis on every x_{i,t}.
Proposal scales are tuned during burn-in only and frozen afterwards.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd
from scipy.stats import gaussian_kde

from seqeb.config import McmcConfig
from seqeb.errors import DomainError
from seqeb.model import ModelSpec
from seqeb.spatial.gaussian import GaussianFactorization, factorize
from seqeb.suffstats.accumulators import TemporalSuffStats, Theta, joint_state_loglik, path_stats
from seqeb.suffstats.conditionals import (
    alpha_full_conditional,
    beta_full_conditional,
    sigma2_full_conditional,
)

logger = logging.getLogger(__name__)

# Robbins-Monro style scale adaptation on log step^2.
ADAPT_C0 = 3.0
ADAPT_C1 = 0.8
ADAPT_OFFSET = 3.0


@dataclass(frozen=True, eq=False)
class McmcResult:
    """Kept draws (exactly ``config.samples`` of them) and diagnostics."""
    alpha: np.ndarray
    beta: np.ndarray
    sigma2: np.ndarray
    phi: np.ndarray
    x_mean: np.ndarray
    x_var: np.ndarray
    acceptance: dict[str, float]
    steps: dict[str, float]
    x_draws: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return int(self.alpha.shape[0])

    def theta_samples(self) -> np.ndarray:
        return np.column_stack([self.alpha, self.beta, self.sigma2])

    def interval(self, values: np.ndarray, level: float = 0.95) -> tuple[float, float]:
        lo, hi = np.quantile(values, [0.5 * (1.0 - level), 0.5 * (1.0 + level)])
        return float(lo), float(hi)

    def phi_mode(self, grid: Optional[np.ndarray] = None) -> float:
        """Mode of a kernel density estimate of the phi draws."""
        if np.ptp(self.phi) == 0.0:
            return float(self.phi[0])
        if grid is None:
            grid = np.linspace(self.phi.min(), self.phi.max(), 512)
        density = gaussian_kde(self.phi)(grid)
        return float(grid[int(np.argmax(density))])

    def to_frame(self) -> pd.DataFrame:
        data: dict[str, np.ndarray] = {"draw": np.arange(self.size), "alpha": self.alpha}
        for i in range(self.beta.shape[1]):
            data[f"beta_{i}"] = self.beta[:, i]
        data["sigma2"] = self.sigma2
        data["phi"] = self.phi
        return pd.DataFrame(data)


@dataclass
class _Tuning:
    phi_step: float
    x_step: np.ndarray
    phi_tries: int = 0
    phi_hits: int = 0
    x_tries: np.ndarray = field(default_factory=lambda: np.zeros(0))
    x_hits: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def reset(self) -> None:
        self.phi_tries = 0
        self.phi_hits = 0
        self.x_tries = np.zeros_like(self.x_step)
        self.x_hits = np.zeros_like(self.x_step)


class OfflineSampler:
    """State and moves of the offline chain for one dataset."""

    def __init__(
        self,
        y: np.ndarray,
        tau: np.ndarray,
        mask: np.ndarray,
        model: ModelSpec,
        config: McmcConfig,
        theta: Theta,
        phi: float,
        x: np.ndarray,
    ) -> None:
        self.y = np.where(mask, y, 0.0)
        self.tau = tau
        self.mask = mask
        self.model = model
        self.config = config
        self.T = int(y.shape[0])
        self.Gs = model.designs(self.T)
        self.theta = theta
        self.x = np.array(x, dtype=float)
        self._set_phi(phi)
        self.tuning = _Tuning(phi_step=config.phi_step, x_step=np.full(model.n, config.x_step))
        self.tuning.reset()

    def _set_phi(self, phi: float, fac: Optional[GaussianFactorization] = None) -> None:
        self.phi = float(phi)
        self.fac = fac if fac is not None else factorize(self.model.correlation(phi), phi=phi)

    def stats(self, fac: Optional[GaussianFactorization] = None) -> TemporalSuffStats:
        fac = fac or self.fac
        return path_stats(
            self.x, self.Gs, fac.whitener[None], np.array([fac.phi]), np.array([fac.logdet])
        ).entry(0)

    def _residuals(self) -> None:
        """e_0 = eta_0, e_t = eta_t - alpha eta_{t-1}, and R^-1 e_t for every t by triangular solves."""
        eta = self.x - np.einsum("snm,m->sn", self.Gs, self.theta.beta)
        r = eta.copy()
        r[1:] -= self.theta.alpha * eta[:-1]
        self.Pr = self.fac.solve(r.T).T

    def gibbs(self, rng: np.random.Generator) -> None:
        cfg = self.config
        prior = self.model.prior
        u = self.stats()
        alpha = self.theta.alpha if cfg.fixed_alpha is None else cfg.fixed_alpha
        sigma2 = self.theta.sigma2 if cfg.fixed_sigma2 is None else cfg.fixed_sigma2
        beta = beta_full_conditional(u, alpha, sigma2, prior).sample(rng)
        if cfg.fixed_alpha is None:
            alpha = float(alpha_full_conditional(u, beta, sigma2, prior).sample(rng)[0])
        if cfg.fixed_sigma2 is None:
            sigma2 = sigma2_full_conditional(u, alpha, beta, prior).sample(rng)
        self.theta = Theta(alpha=alpha, beta=beta, sigma2=sigma2)

    def log_phi_target(self, phi: float, fac: GaussianFactorization) -> float:
        """log p(x_{0:T} | theta, phi) + log Exp prior + log-scale Jacobian."""
        return joint_state_loglik(self.stats(fac), self.theta) - phi / self.config.phi_prior_mean + np.log(phi)

    def phi_move(self, rng: np.random.Generator) -> bool:
        proposal = self.phi * float(np.exp(self.tuning.phi_step * rng.standard_normal()))
        fac = factorize(self.model.correlation(proposal), phi=proposal)
        log_ratio = self.log_phi_target(proposal, fac) - self.log_phi_target(self.phi, self.fac)
        self.tuning.phi_tries += 1
        if np.log(rng.uniform()) < log_ratio:
            self._set_phi(proposal, fac)
            self.tuning.phi_hits += 1
            return True
        return False

    def x_sweep(self, rng: np.random.Generator) -> None:
        """Single-site updates; times of equal parity are conditionally independent."""
        self._residuals()
        alpha = self.theta.alpha
        sigma2 = self.theta.sigma2
        family = self.model.family
        T = self.T
        unit = np.eye(self.model.n)
        for i in range(self.model.n):
            Pi = self.fac.solve(unit[i])
            Pii = Pi[i]
            for parity in (0, 1):
                ts = np.arange(parity, T + 1, 2)
                delta = self.tuning.x_step[i] * rng.standard_normal(ts.shape[0])
                quad = delta * self.Pr[ts, i] + 0.5 * delta * delta * Pii
                has_next = ts < T
                nxt = ts[has_next] + 1
                quad[has_next] += -alpha * delta[has_next] * self.Pr[nxt, i] + 0.5 * (alpha * delta[has_next]) ** 2 * Pii
                log_ratio = -quad / sigma2

                obs = ts >= 1
                t_obs = ts[obs]
                seen = self.mask[t_obs - 1, i]
                rows = t_obs[seen]
                if rows.size:
                    old = self.x[rows, i]
                    new = old + delta[obs][seen]
                    y = self.y[rows - 1, i]
                    tau = self.tau[rows - 1, i]
                    gain = y * (family.g(new) - family.g(old)) - tau * (family.b(new) - family.b(old))
                    idx = np.nonzero(obs)[0][seen]
                    log_ratio[idx] += gain

                accept = np.log(rng.uniform(size=ts.shape[0])) < log_ratio
                self.tuning.x_tries[i] += ts.shape[0]
                self.tuning.x_hits[i] += int(accept.sum())
                if not accept.any():
                    continue
                moved = ts[accept]
                d = delta[accept]
                self.x[moved, i] += d
                self.Pr[moved] += d[:, None] * Pi
                follow = moved < T
                self.Pr[moved[follow] + 1] -= alpha * d[follow][:, None] * Pi

    def adapt(self, iteration: int) -> None:
        cfg = self.config
        target = 0.5 * (cfg.accept_low + cfg.accept_high)
        gain = ADAPT_C0 / (iteration / cfg.adapt_every + ADAPT_OFFSET) ** ADAPT_C1
        tn = self.tuning
        if tn.phi_tries:
            rate = tn.phi_hits / tn.phi_tries
            tn.phi_step = float(np.exp(0.5 * (2.0 * np.log(tn.phi_step) + gain * (rate - target))))
        rates = np.divide(tn.x_hits, np.maximum(tn.x_tries, 1))
        tn.x_step = np.exp(0.5 * (2.0 * np.log(tn.x_step) + gain * (rates - target)))
        tn.reset()


def _initial_path(y: np.ndarray, tau: np.ndarray, mask: np.ndarray, model: ModelSpec, theta: Theta) -> np.ndarray:
    T, n = y.shape
    x = np.stack([model.G(t) @ theta.beta for t in range(T + 1)])
    if model.family.name == "poisson":
        guess = np.log((y + 0.5) / tau)
    else:
        guess = y / tau
    x[1:] = np.where(mask, guess, x[1:])
    return x


def run_offline(
    y: np.ndarray,
    model: ModelSpec,
    config: McmcConfig,
    rng: np.random.Generator,
    tau: Optional[np.ndarray] = None,
    mask: Optional[np.ndarray] = None,
    init: Optional[Theta] = None,
    phi_init: Optional[float] = None,
    keep_draws: bool = False,
) -> McmcResult:
    """Posterior draws of (theta, phi, x_{0:T}) given y_{1:T}.

    Args:
        y: (T, n) observations; masked entries are ignored.
        tau: (T, n) exposures, ones by default.
        mask: (T, n) observed flags, all True by default.
        init: starting theta; the prior centre by default.
        phi_init: starting phi; ``config.fixed_phi`` or the prior mean by default.
        keep_draws: also return the (samples, T+1, n) latent draws.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 2 or y.shape[1] != model.n:
        raise DomainError(f"y must be (T, {model.n}), got {y.shape}")
    tau = np.ones_like(y) if tau is None else np.broadcast_to(np.asarray(tau, dtype=float), y.shape)
    mask = np.ones(y.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    model.family.validate(y, mask)
    if init is None:
        prior = model.prior
        beta0 = prior.b0_vector(model.m) / prior.q0 if prior.q0 > 0 else np.zeros(model.m)
        init = Theta(alpha=prior.a0 / prior.s0 if prior.s0 > 0 else 0.0, beta=beta0, sigma2=1.0)
    if config.fixed_alpha is not None or config.fixed_sigma2 is not None:
        init = Theta(
            alpha=init.alpha if config.fixed_alpha is None else config.fixed_alpha,
            beta=init.beta,
            sigma2=init.sigma2 if config.fixed_sigma2 is None else config.fixed_sigma2,
        )
    phi = config.fixed_phi or phi_init or config.phi_prior_mean
    sampler = OfflineSampler(y, tau, mask, model, config, init, phi, _initial_path(y, tau, mask, model, init))

    thin = max(config.thin, 1)
    total = config.burn_in + config.samples * thin
    S, T, n, m = config.samples, y.shape[0], model.n, model.m
    alpha = np.empty(S)
    beta = np.empty((S, m))
    sigma2 = np.empty(S)
    phis = np.empty(S)
    x_draws = np.empty((S, T + 1, n)) if keep_draws else None
    x_mean = np.zeros((T + 1, n))
    x_m2 = np.zeros((T + 1, n))
    kept = 0
    for it in range(1, total + 1):
        sampler.gibbs(rng)
        if config.fixed_phi is None:
            sampler.phi_move(rng)
        sampler.x_sweep(rng)
        if it <= config.burn_in:
            if it % config.adapt_every == 0:
                sampler.adapt(it)
            continue
        if it == config.burn_in + 1:
            sampler.tuning.reset()
        if (it - config.burn_in) % thin:
            continue
        th = sampler.theta
        alpha[kept] = th.alpha
        beta[kept] = th.beta
        sigma2[kept] = th.sigma2
        phis[kept] = sampler.phi
        if x_draws is not None:
            x_draws[kept] = sampler.x
        kept += 1
        d = sampler.x - x_mean
        x_mean += d / kept
        x_m2 += d * (sampler.x - x_mean)
    phi_hits, phi_tries = sampler.tuning.phi_hits, sampler.tuning.phi_tries
    x_hits, x_tries = int(sampler.tuning.x_hits.sum()), int(sampler.tuning.x_tries.sum())

    acceptance = {"x": x_hits / max(x_tries, 1)}
    if config.fixed_phi is None:
        acceptance["phi"] = phi_hits / max(phi_tries, 1)
    for name, rate in acceptance.items():
        if not config.accept_low <= rate <= config.accept_high:
            logger.warning(
                "%s acceptance %.3f is outside [%.2f, %.2f] after adaptation (steps: phi %.3g, x mean %.3g)",
                name, rate, config.accept_low, config.accept_high,
                sampler.tuning.phi_step, float(np.mean(sampler.tuning.x_step)),
            )
    return McmcResult(
        alpha=alpha,
        beta=beta,
        sigma2=sigma2,
        phi=phis,
        x_mean=x_mean,
        x_var=x_m2 / max(kept - 1, 1),
        acceptance=acceptance,
        steps={"phi": sampler.tuning.phi_step, "x": float(np.mean(sampler.tuning.x_step))},
        x_draws=x_draws,
    )


def sample_phi(
    x: np.ndarray,
    theta: Theta,
    model: ModelSpec,
    config: McmcConfig,
    rng: np.random.Generator,
    size: int,
    phi_init: Optional[float] = None,
) -> np.ndarray:
    """Run only the phi kernel with x_{0:T} and theta frozen."""
    x = np.asarray(x, dtype=float)
    T = x.shape[0] - 1
    sampler = OfflineSampler(
        np.zeros((T, model.n)), np.ones((T, model.n)), np.zeros((T, model.n), dtype=bool),
        model, config, theta, phi_init or config.phi_prior_mean, x,
    )
    out = np.empty(size)
    for i in range(size):
        sampler.phi_move(rng)
        out[i] = sampler.phi
    return out
