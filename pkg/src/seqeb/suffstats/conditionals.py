"""Conjugate full conditionals for theta and the Gibbs sweep.

Priors: beta | sigma2 ~ N(Q0^-1 b0, sigma2 Q0^-1) with Q0 = q0 I,
alpha | sigma2 ~ N(a0/s0, sigma2/s0), sigma2 ~ IG(c0/2, r0/2).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Union

import numpy as np
from scipy.linalg import cho_solve, lapack, solve_triangular

from seqeb.errors import AccumulatorError, DomainError, NotPositiveDefiniteError
from seqeb.suffstats.accumulators import (
    TemporalSuffStats,
    Theta,
    lagged_moments,
    state_ssr,
    transition_precision,
    transition_shift,
)


@dataclass(frozen=True, eq=False)
class PriorHyper:
    """Hyperparameters of the conjugate prior.

    A zero precision (q0 = 0 or s0 = 0) makes that block flat; flat blocks add
    nothing to the sigma2 shape or rate.
    """
    a0: float = 0.0
    s0: float = 0.1
    b0: Union[float, np.ndarray] = 0.0
    q0: float = 0.01
    c0: float = 3.0
    r0: float = 1.0 / 3.0

    def __post_init__(self) -> None:
        problems = []
        if self.s0 < 0:
            problems.append(f"s0 must be >= 0, got {self.s0}")
        if self.q0 < 0:
            problems.append(f"q0 must be >= 0, got {self.q0}")
        if self.c0 <= 0:
            problems.append(f"c0 must be > 0, got {self.c0}")
        if self.r0 <= 0:
            problems.append(f"r0 must be > 0, got {self.r0}")
        if problems:
            raise DomainError("invalid prior: " + "; ".join(problems))

    def b0_vector(self, m: int) -> np.ndarray:
        b0 = np.atleast_1d(np.asarray(self.b0, dtype=float))
        if b0.shape == (1,):
            return np.full(m, float(b0[0]))
        if b0.shape != (m,):
            raise DomainError(f"b0 has {b0.shape[0]} entries, model has {m} covariates")
        return b0

    def prior_dims(self, m: int) -> int:
        """Number of sigma2-scaled prior dimensions: m for beta plus one for alpha."""
        return (m if self.q0 > 0 else 0) + (1 if self.s0 > 0 else 0)

    def beta_ssr(self, beta: np.ndarray) -> float:
        if self.q0 <= 0:
            return 0.0
        b0 = self.b0_vector(beta.shape[0])
        d = beta - b0 / self.q0
        return float(self.q0 * d @ d)

    def alpha_ssr(self, alpha: float) -> float:
        if self.s0 <= 0:
            return 0.0
        return float(self.s0 * (alpha - self.a0 / self.s0) ** 2)

    def to_dict(self) -> dict[str, Any]:
        b0 = np.atleast_1d(np.asarray(self.b0, dtype=float))
        return {
            "a0": self.a0,
            "s0": self.s0,
            "b0": float(b0[0]) if b0.size == 1 else b0.tolist(),
            "q0": self.q0,
            "c0": self.c0,
            "r0": self.r0,
        }


@dataclass(frozen=True, eq=False)
class GaussianConditional:
    """N(mean, scale * P^-1) given the lower Cholesky factor of P."""
    mean: np.ndarray
    precision_lower: np.ndarray
    scale: float

    @property
    def cov(self) -> np.ndarray:
        k = self.mean.shape[0]
        return self.scale * cho_solve((self.precision_lower, True), np.eye(k))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal(self.mean.shape[0])
        step = solve_triangular(self.precision_lower, z, lower=True, trans="T")
        return self.mean + np.sqrt(self.scale) * step


@dataclass(frozen=True)
class InverseGammaConditional:
    """IG(shape, rate) with density proportional to s^-(shape+1) exp(-rate/s)."""
    shape: float
    rate: float

    @property
    def mean(self) -> float:
        return self.rate / (self.shape - 1.0) if self.shape > 1.0 else float("inf")

    @property
    def precision_mean(self) -> float:
        """E[1 / sigma2]."""
        return self.shape / self.rate

    def sample(self, rng: np.random.Generator) -> float:
        return float(self.rate / rng.gamma(self.shape))


def _cholesky(Q: np.ndarray, what: str) -> np.ndarray:
    c, info = lapack.dpotrf(np.asarray(Q, dtype=float), lower=1, clean=1, overwrite_a=0)
    if info != 0:
        raise NotPositiveDefiniteError(f"{what} precision is not positive definite (pivot {info})")
    return np.tril(c)


def _check_sigma2(sigma2: float) -> None:
    if not np.isfinite(sigma2) or sigma2 <= 0.0:
        raise DomainError(f"sigma2 must be positive, got {sigma2}")


def beta_full_conditional(u: TemporalSuffStats, alpha: float, sigma2: float, prior: PriorHyper) -> GaussianConditional:
    """beta | alpha, sigma2, x_{0:t} ~ N(Q_t^-1 b_t, sigma2 Q_t^-1)."""
    _check_sigma2(sigma2)
    blocks = u.blocks
    m = u.m
    Q = prior.q0 * np.eye(m) + transition_precision(blocks, alpha)
    b = prior.b0_vector(m) + transition_shift(blocks, alpha)
    L = _cholesky(0.5 * (Q + Q.T), "beta")
    mean = cho_solve((L, True), b)
    return GaussianConditional(mean=mean, precision_lower=L, scale=sigma2)


def alpha_full_conditional(u: TemporalSuffStats, beta: np.ndarray, sigma2: float, prior: PriorHyper) -> GaussianConditional:
    """alpha | beta, sigma2, x_{0:t} ~ N((a0 + S_pc)/s_t, sigma2/s_t), s_t = s0 + S_pp."""
    _check_sigma2(sigma2)
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    s_pp, s_pc = lagged_moments(u.blocks, beta)
    s_t = prior.s0 + float(s_pp)
    if not np.isfinite(s_t) or s_t <= 0.0:
        raise NotPositiveDefiniteError(f"alpha precision is not positive (s_t = {s_t})")
    mean = np.array([(prior.a0 + float(s_pc)) / s_t])
    return GaussianConditional(mean=mean, precision_lower=np.array([[np.sqrt(s_t)]]), scale=sigma2)


def sigma2_full_conditional(u: TemporalSuffStats, alpha: float, beta: np.ndarray, prior: PriorHyper) -> InverseGammaConditional:
    """sigma2 | alpha, beta, x_{0:t} ~ IG(shape, rate).

    shape = (c0 + (t+1) n + prior_dims) / 2 and
    rate = (r0 + state residuals + beta and alpha prior residuals) / 2.
    """
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    ssr = float(state_ssr(u.blocks, alpha, beta))
    shape = 0.5 * (prior.c0 + (u.t + 1) * u.n + prior.prior_dims(u.m))
    rate = 0.5 * (prior.r0 + ssr + prior.beta_ssr(beta) + prior.alpha_ssr(alpha))
    if not np.isfinite(rate) or rate <= 0.0:
        raise AccumulatorError(f"inverse-gamma rate {rate} is not positive; accumulators are inconsistent")
    return InverseGammaConditional(shape=shape, rate=rate)


def gibbs_sweep(u: TemporalSuffStats, theta_init: Theta, prior: PriorHyper, n_iter: int, rng: np.random.Generator) -> Theta:
    """Systematic scan beta -> alpha -> sigma2 repeated ``n_iter`` times."""
    if n_iter < 1:
        raise DomainError(f"n_iter must be >= 1, got {n_iter}")
    alpha = theta_init.alpha
    beta = np.array(theta_init.beta, dtype=float)
    sigma2 = theta_init.sigma2
    for _ in range(n_iter):
        beta = beta_full_conditional(u, alpha, sigma2, prior).sample(rng)
        alpha = float(alpha_full_conditional(u, beta, sigma2, prior).sample(rng)[0])
        sigma2 = sigma2_full_conditional(u, alpha, beta, prior).sample(rng)
    return Theta(alpha=alpha, beta=beta, sigma2=sigma2)
