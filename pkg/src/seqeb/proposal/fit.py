"""Proposal construction: Laplace fit plus skew-normal copula corrections."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import ndtr, ndtri

from seqeb.proposal import skewnormal
from seqeb.proposal.laplace import LaplaceFit, third_derivatives
from seqeb.spatial.gaussian import LOG_2PI
from seqeb.spatial.observation import ObservationBatch, ObservationFamily


class ProposalMode(str, Enum):
    """Corrections applied on top of the Laplace proposal."""
    GAUSSIAN = "gaussian"
    MEAN_ONLY = "mean_only"
    MEAN_SKEW = "mean_skew"


@dataclass(frozen=True, eq=False)
class SkewMarginals:
    """Per-coordinate skew-normal parameters and the Gaussian marginals they correct."""
    xi: np.ndarray
    omega: np.ndarray
    a: np.ndarray
    m: np.ndarray
    s: np.ndarray

    @property
    def delta2(self) -> np.ndarray:
        return self.a**2 / (1.0 + self.a**2)

    @property
    def mean(self) -> np.ndarray:
        return skewnormal.moments(self.xi, self.omega, self.a)[0]


@dataclass(frozen=True, eq=False)
class ProposalFit:
    """Everything needed to sample from and evaluate the proposal."""
    laplace: LaplaceFit
    marginals: SkewMarginals
    mode: ProposalMode

    @property
    def center(self) -> np.ndarray:
        """Mean of the Gaussian component (shifted in mean-only mode)."""
        if self.mode is ProposalMode.MEAN_ONLY:
            return self.laplace.mode + (self.marginals.mean - self.marginals.m)
        return self.laplace.mode

    @property
    def skewed(self) -> np.ndarray:
        """Coordinates transformed by the copula in mean-plus-skewness mode."""
        if self.mode is not ProposalMode.MEAN_SKEW:
            return np.zeros(self.laplace.n, dtype=bool)
        return self.marginals.a != 0.0


def fit_skew_marginals(
    laplace: LaplaceFit,
    batch: ObservationBatch,
    family: ObservationFamily,
) -> SkewMarginals:
    """Match skew-normal marginals to a third-order expansion at the mode.

    With s_i^2 = (H^-1)_ii and kappa_i = f'''_i s_i^3, the target marginal has
    skewness -kappa_i and mean m_i - kappa_i s_i / 2 to first order.
    """
    m = laplace.mode
    s = np.sqrt(laplace.marginal_variances())
    kappa = third_derivatives(m, batch, family) * s**3
    target_mean = m - 0.5 * kappa * s
    xi, omega, a = skewnormal.from_moments(target_mean, s * s, -kappa)
    symmetric = kappa == 0.0
    xi = np.where(symmetric, m, xi)
    omega = np.where(symmetric, s, omega)
    a = np.where(symmetric, 0.0, a)
    return SkewMarginals(xi=xi, omega=omega, a=a, m=m.copy(), s=s)


def build_proposal(
    laplace: LaplaceFit,
    batch: ObservationBatch,
    family: ObservationFamily,
    mode: ProposalMode = ProposalMode.MEAN_ONLY,
) -> ProposalFit:
    return ProposalFit(laplace=laplace, marginals=fit_skew_marginals(laplace, batch, family), mode=ProposalMode(mode))


def _gaussian_draws(fit: ProposalFit, N: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((N, fit.laplace.n))
    return fit.center + fit.laplace.scale(z)


def sample_proposal(fit: ProposalFit, N: int, rng: np.random.Generator) -> np.ndarray:
    """Draw N proposal particles, shape (N, n)."""
    x = _gaussian_draws(fit, N, rng)
    skewed = fit.skewed
    if skewed.any():
        mg = fit.marginals
        u = ndtr((x[:, skewed] - mg.m[skewed]) / mg.s[skewed])
        x[:, skewed] = skewnormal.ppf(u, mg.xi[skewed], mg.omega[skewed], mg.a[skewed])
    return x


def _gaussian_logpdf(fit: ProposalFit, x: np.ndarray) -> np.ndarray:
    laplace = fit.laplace
    v = laplace.whiten(np.atleast_2d(x) - fit.center)
    return -0.5 * laplace.n * LOG_2PI + laplace.half_logdet() - 0.5 * np.sum(v * v, axis=1)


def preimage(fit: ProposalFit, x: np.ndarray) -> np.ndarray:
    """Gaussian pre-image of proposal draws under the copula transform."""
    x = np.array(np.atleast_2d(x), dtype=float)
    skewed = fit.skewed
    if skewed.any():
        mg = fit.marginals
        xs = x[:, skewed]
        args = (mg.xi[skewed], mg.omega[skewed], mg.a[skewed])
        lower = skewnormal.cdf(xs, *args)
        upper = skewnormal.sf(xs, *args)
        z = np.where(lower < 0.5, ndtri(lower), -ndtri(upper))
        x[:, skewed] = mg.m[skewed] + mg.s[skewed] * z
    return x


def proposal_logpdf(fit: ProposalFit, x: np.ndarray) -> np.ndarray | float:
    """log q(x); a single n-vector gives a float, an (N, n) batch an (N,) array."""
    single = np.ndim(x) == 1
    z = preimage(fit, x)
    out = _gaussian_logpdf(fit, z)
    skewed = fit.skewed
    if skewed.any():
        mg = fit.marginals
        xs = np.atleast_2d(x)[:, skewed]
        sn = skewnormal.logpdf(xs, mg.xi[skewed], mg.omega[skewed], mg.a[skewed])
        zs = (z[:, skewed] - mg.m[skewed]) / mg.s[skewed]
        gauss = -0.5 * zs * zs - 0.5 * LOG_2PI - np.log(mg.s[skewed])
        out = out + np.sum(sn - gauss, axis=1)
    return float(out[0]) if single else out


def mean_delta2(fit: ProposalFit) -> float:
    return float(np.mean(fit.marginals.delta2))

