"""Laplace approximation of the one-step optimal proposal.

f(x) = -log p(y_t | x) - log p(x | x_{t-1}, theta, phi), minimized by damped Newton.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, lapack, solve_triangular

from seqeb.errors import ConvergenceError, DomainError, NotPositiveDefiniteError
from seqeb.spatial.gaussian import GaussianFactorization
from seqeb.spatial.observation import ObservationBatch, ObservationFamily
from seqeb.suffstats.accumulators import Theta

logger = logging.getLogger(__name__)

NEWTON_TOL = 1e-8
NEWTON_MAX_ITER = 50
MAX_HALVINGS = 30


@dataclass(frozen=True, eq=False)
class LaplaceFit:
    """Mode of f and the Hessian there, held in factored form.

    With K = sigma L the lower factor of the transition covariance and
    C C' = I + K' D K, the Hessian is H = K^-T C C' K^-1 and H^-1 = S S'
    with S = K C^-T. Only triangular solves are used.
    """
    mode: np.ndarray
    transition_lower: np.ndarray
    inner_lower: np.ndarray
    prior_mean: np.ndarray
    iterations: int

    @property
    def n(self) -> int:
        return int(self.mode.shape[0])

    def covariance_factor(self) -> np.ndarray:
        """S with S S' = H^-1."""
        return solve_triangular(self.inner_lower, self.transition_lower.T, lower=True).T

    def covariance(self) -> np.ndarray:
        S = self.covariance_factor()
        return S @ S.T

    def marginal_variances(self) -> np.ndarray:
        """diag(H^-1)."""
        S = self.covariance_factor()
        return np.sum(S * S, axis=1)

    def half_logdet(self) -> float:
        """log |H|^(1/2)."""
        return float(np.sum(np.log(np.diag(self.inner_lower))) - np.sum(np.log(np.diag(self.transition_lower))))

    def whiten(self, r: np.ndarray) -> np.ndarray:
        """C' K^-1 r for each row of ``r``, so that |v|^2 = r' H r."""
        a = solve_triangular(self.transition_lower, np.atleast_2d(r).T, lower=True)
        return (self.inner_lower.T @ a).T

    def scale(self, z: np.ndarray) -> np.ndarray:
        """S z for each row of ``z``; standard normal rows get covariance H^-1."""
        b = solve_triangular(self.inner_lower, np.atleast_2d(z).T, lower=True, trans="T")
        return (self.transition_lower @ b).T


def transition_mean(x_prev: np.ndarray, theta: Theta, G_t: np.ndarray, G_prev: np.ndarray) -> np.ndarray:
    """mu_t = G_t beta + alpha (x_{t-1} - G_{t-1} beta)."""
    return G_t @ theta.beta + theta.alpha * (np.asarray(x_prev, dtype=float) - G_prev @ theta.beta)


def _data_terms(batch: ObservationBatch, x: np.ndarray, family: ObservationFamily) -> float:
    mask = batch.mask
    if not mask.any():
        return 0.0
    xo = x[mask]
    return float(np.sum(batch.y[mask] * family.g(xo) - batch.tau[mask] * family.b(xo)))


def negative_log_target(
    x: np.ndarray,
    batch: ObservationBatch,
    mu: np.ndarray,
    sigma2: float,
    fac: GaussianFactorization,
    family: ObservationFamily,
) -> float:
    """f(x) up to an additive constant."""
    a = fac.whiten(np.asarray(x, dtype=float) - mu)
    return -_data_terms(batch, x, family) + 0.5 * float(a @ a) / sigma2


def optimal_proposal_logdensity(
    x: np.ndarray,
    batch: ObservationBatch,
    mu: np.ndarray,
    sigma2: float,
    fac: GaussianFactorization,
    family: ObservationFamily,
) -> float:
    """Unnormalized log p(x_t | x_{t-1}, y_t, theta, phi)."""
    return -negative_log_target(x, batch, mu, sigma2, fac, family)


def _derivatives(x: np.ndarray, batch: ObservationBatch, family: ObservationFamily) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    d1, d2, d3 = family.nll_derivatives(batch.y, x, batch.tau)
    mask = batch.mask
    return np.where(mask, d1, 0.0), np.where(mask, d2, 0.0), np.where(mask, d3, 0.0)


def third_derivatives(mode: np.ndarray, batch: ObservationBatch, family: ObservationFamily) -> np.ndarray:
    """Per-coordinate third derivative of f at the mode (zero where unobserved)."""
    return _derivatives(mode, batch, family)[2]


def _cholesky(H: np.ndarray) -> np.ndarray:
    c, info = lapack.dpotrf(H, lower=1, clean=1, overwrite_a=0)
    if info != 0:
        raise NotPositiveDefiniteError(f"Hessian is not positive definite (pivot {info})")
    return np.tril(c)


def fit_mode(
    batch: ObservationBatch,
    x_prev: np.ndarray,
    theta: Theta,
    fac: GaussianFactorization,
    family: ObservationFamily,
    G_t: np.ndarray,
    G_prev: np.ndarray,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
    max_halvings: int = MAX_HALVINGS,
) -> LaplaceFit:
    """Minimize f by Newton's method with step halving.

    Starts from the transition mean. Converged when the gradient max-norm is
    below ``tol``.

    Raises:
        ConvergenceError: no convergence within ``max_iter`` damped steps;
            ``last_iterate`` holds the final x.
    """
    mu = transition_mean(x_prev, theta, G_t, G_prev)
    if mu.shape != (fac.n,) or batch.n != fac.n:
        raise DomainError("observation batch, state and factorization sizes differ")
    sigma2 = theta.sigma2
    K = np.sqrt(sigma2) * fac.lower
    eye = np.eye(fac.n)
    x = mu.copy()

    for iteration in range(max_iter + 1):
        d1, d2, _ = _derivatives(x, batch, family)
        grad = d1 + fac.solve(x - mu) / sigma2
        C = _cholesky(eye + K.T @ (d2[:, None] * K))
        if np.max(np.abs(grad)) < tol:
            return LaplaceFit(mode=x, transition_lower=K, inner_lower=C, prior_mean=mu, iterations=iteration)
        if iteration == max_iter:
            break

        # H^-1 g = K (C C')^-1 K' g
        step = K @ cho_solve((C, True), K.T @ grad)
        f0 = negative_log_target(x, batch, mu, sigma2, fac, family)
        scale = 1.0
        for _ in range(max_halvings + 1):
            candidate = x - scale * step
            f1 = negative_log_target(candidate, batch, mu, sigma2, fac, family)
            if np.isfinite(f1) and f1 <= f0:
                break
            scale *= 0.5
        else:
            # f is flat to rounding around x; accept a near-stationary point
            if np.max(np.abs(grad)) < np.sqrt(tol):
                logger.debug("Newton halvings exhausted at |grad|=%.2e; accepting", np.max(np.abs(grad)))
                return LaplaceFit(mode=x, transition_lower=K, inner_lower=C, prior_mean=mu, iterations=iteration)
            raise ConvergenceError("Newton step could not decrease the objective", last_iterate=x)
        x = candidate

    raise ConvergenceError(
        f"Newton iteration did not converge in {max_iter} steps "
        f"(|grad| = {np.max(np.abs(grad)):.3e})",
        last_iterate=x,
    )
