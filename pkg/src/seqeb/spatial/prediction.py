"""Gaussian conditioning of the latent field at unmonitored locations."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from seqeb.errors import DomainError
from seqeb.spatial.gaussian import GaussianFactorization, factorize
from seqeb.spatial.kernels import CorrelationKernel, SiteSet, build_correlation, cross_correlation

COINCIDENT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ConditionalField:
    """Mean and covariance of x*_t given x_t at the monitored sites."""
    mean: np.ndarray
    cov: np.ndarray

    @property
    def sd(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None))

    def sample(self, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        w, v = np.linalg.eigh(0.5 * (self.cov + self.cov.T))
        root = v * np.sqrt(np.clip(w, 0.0, None))
        shape = (self.mean.shape[0],) if size is None else (size, self.mean.shape[0])
        z = rng.standard_normal(shape)
        return self.mean + z @ root.T


def conditional_field(
    x_t: np.ndarray,
    monitored: SiteSet,
    targets: SiteSet,
    beta: np.ndarray,
    sigma2: float,
    phi: float,
    G_t: np.ndarray,
    G_targets: np.ndarray,
    fac: Optional[GaussianFactorization] = None,
    kernel: Optional[CorrelationKernel] = None,
) -> ConditionalField:
    """Conditional Gaussian of the field at ``targets`` given ``x_t``.

    Targets coinciding with a monitored site get that site's value and zero
    variance.
    """
    x_t = np.asarray(x_t, dtype=float)
    if x_t.shape != (monitored.n,):
        raise DomainError(f"x_t has shape {x_t.shape}, expected ({monitored.n},)")
    if sigma2 < 0.0:
        raise DomainError(f"sigma2 must be nonnegative, got {sigma2}")
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    if fac is None:
        fac = factorize(build_correlation(monitored, phi, kernel), phi=phi)

    mu = G_t @ beta
    mu_star = G_targets @ beta
    cross = cross_correlation(targets, monitored, phi, kernel)
    gain = fac.solve(cross.T).T
    mean = mu_star + gain @ (x_t - mu)
    R22 = build_correlation(targets, phi, kernel) if targets.n > 1 else np.ones((1, 1))
    cov = sigma2 * (R22 - gain @ cross.T)

    dist = np.sqrt(np.sum((targets.coords[:, None, :] - monitored.coords[None, :, :]) ** 2, axis=2))
    hit_t, hit_m = np.nonzero(dist <= COINCIDENT_TOL)
    if hit_t.size:
        mean[hit_t] = x_t[hit_m]
        cov[hit_t, :] = 0.0
        cov[:, hit_t] = 0.0
    return ConditionalField(mean=mean, cov=0.5 * (cov + cov.T))


def predict_unmonitored(
    x_t: np.ndarray,
    monitored: SiteSet,
    targets: SiteSet,
    beta: np.ndarray,
    sigma2: float,
    phi: float,
    G_t: np.ndarray,
    G_targets: np.ndarray,
    rng: np.random.Generator,
    size: Optional[int] = None,
    fac: Optional[GaussianFactorization] = None,
    kernel: Optional[CorrelationKernel] = None,
) -> np.ndarray:
    """Draw from p(x*_t | x_t, theta, phi)."""
    cond = conditional_field(x_t, monitored, targets, beta, sigma2, phi, G_t, G_targets, fac, kernel)
    return cond.sample(rng, size)
