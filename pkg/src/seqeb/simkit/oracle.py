"""Brute-force marginal likelihoods for tiny instances.

For fixed (alpha, sigma2) the initial state and beta are Gaussian and are
integrated in closed form, leaving x_{1:T} ~ N(G b0/q0, sigma2 S) with
S = A(alpha) (x) R + G G'/q0. The remaining observed coordinates are
integrated by adaptive Gauss-Hermite quadrature around the mode (exactly,
for the Gaussian family), alpha by Gauss-Hermite against its prior and
sigma2 by Gauss-Legendre in its prior CDF.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import cho_solve, lapack, solve_triangular
from scipy.special import logsumexp
from scipy.stats import invgamma, multivariate_normal

from seqeb.errors import ConvergenceError, DomainError, NotPositiveDefiniteError
from seqeb.model import ModelSpec
from seqeb.suffstats.accumulators import Theta

MAX_DIMS = 6


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts; ``inner`` is per latent coordinate."""
    inner: int = 8
    alpha: int = 32
    sigma2: int = 48
    max_dims: int = MAX_DIMS
    newton_tol: float = 1e-10
    newton_max_iter: int = 100


def ar_time_covariance(alpha: float, T: int) -> np.ndarray:
    """Cov(eta_s, eta_t) / sigma2 for s, t = 1..T with eta_0 ~ N(0, R)."""
    powers = alpha ** (2.0 * np.arange(T + 1))
    v = np.cumsum(powers)
    s = np.arange(1, T + 1)
    lo = np.minimum.outer(s, s)
    lag = np.abs(np.subtract.outer(s, s))
    return alpha ** lag * v[lo]


def latent_moments(
    model: ModelSpec, phi: float, T: int, alpha: float, beta: Optional[np.ndarray] = None
) -> tuple[np.ndarray, np.ndarray]:
    """Mean and sigma2-free covariance of vec(x_{1:T}) in time-major order.

    With ``beta`` given it is held fixed; otherwise it is integrated under its prior.
    """
    R = model.correlation(phi)
    Gs = model.designs(T)[1:].reshape(T * model.n, model.m)
    S = np.kron(ar_time_covariance(alpha, T), R)
    if beta is not None:
        return Gs @ np.asarray(beta, dtype=float), S
    prior = model.prior
    if prior.q0 <= 0:
        raise DomainError("the oracle needs a proper beta prior (q0 > 0)")
    mean = Gs @ (prior.b0_vector(model.m) / prior.q0)
    return mean, S + Gs @ Gs.T / prior.q0


def _chol(M: np.ndarray, what: str) -> np.ndarray:
    c, info = lapack.dpotrf(0.5 * (M + M.T), lower=1, clean=1, overwrite_a=0)
    if info != 0:
        raise NotPositiveDefiniteError(f"{what} is not positive definite (pivot {info})")
    return np.tril(c)


def _log_joint(x: np.ndarray, y: np.ndarray, tau: np.ndarray, mean: np.ndarray, L: np.ndarray, model: ModelSpec) -> np.ndarray:
    """log p(y | x) + log N(x; mean, L L') for a batch of points (rows of x)."""
    family = model.family
    d = mean.shape[0]
    data = np.sum(y * family.g(x) - tau * family.b(x), axis=-1) + float(np.sum(family.log_normalizer(y, tau)))
    a = solve_triangular(L, (x - mean).T, lower=True)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return data - 0.5 * np.sum(a * a, axis=0) - 0.5 * d * np.log(2.0 * np.pi) - 0.5 * logdet


def _mode(y: np.ndarray, tau: np.ndarray, mean: np.ndarray, cov: np.ndarray, model: ModelSpec, spec: QuadratureSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mode of the integrand with L L' = cov and C C' = I + L' D L, so that H = L^-T C C' L^-1."""
    L = _chol(cov, "latent covariance")
    eye = np.eye(mean.shape[0])
    x = mean.copy()

    def objective(v: np.ndarray) -> float:
        return -float(_log_joint(v[None, :], y, tau, mean, L, model)[0])

    f = objective(x)
    for _ in range(spec.newton_max_iter):
        d1, d2, _ = model.family.nll_derivatives(y, x, tau)
        grad = d1 + cho_solve((L, True), x - mean)
        C = _chol(eye + L.T @ (d2[:, None] * L), "Hessian")
        step = L @ cho_solve((C, True), L.T @ grad)
        scale = 1.0
        while True:
            candidate = x - scale * step
            f_new = objective(candidate)
            if f_new <= f or scale < 1e-12:
                break
            scale *= 0.5
        x, f = candidate, f_new
        if np.max(np.abs(scale * step)) < spec.newton_tol:
            d1, d2, _ = model.family.nll_derivatives(y, x, tau)
            return x, L, _chol(eye + L.T @ (d2[:, None] * L), "Hessian")
    raise ConvergenceError("oracle mode search did not converge", last_iterate=x)


def _inner_quadrature(y: np.ndarray, tau: np.ndarray, mean: np.ndarray, cov: np.ndarray, model: ModelSpec, spec: QuadratureSpec) -> float:
    d = mean.shape[0]
    mode, L, C = _mode(y, tau, mean, cov, model, spec)
    nodes, weights = np.polynomial.hermite.hermgauss(spec.inner)
    z = np.array(list(itertools.product(nodes, repeat=d)))
    logw = np.sum(np.log(np.array(list(itertools.product(weights, repeat=d)))), axis=1)
    # x = mode + sqrt(2) S z with S S' = H^-1, S = L C^-T
    points = mode + np.sqrt(2.0) * (L @ solve_triangular(C, z.T, lower=True, trans="T")).T
    values = _log_joint(points, y, tau, mean, L, model)
    half_logdet = float(np.sum(np.log(np.diag(C))) - np.sum(np.log(np.diag(L))))
    log_jac = 0.5 * d * np.log(2.0) - half_logdet
    return float(log_jac + logsumexp(logw + np.sum(z * z, axis=1) + values))


def _inner_gaussian(y: np.ndarray, tau: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> float:
    """y ~ N(tau x, tau) integrated against x ~ N(mean, cov)."""
    D = np.diag(tau)
    return float(multivariate_normal.logpdf(y, mean=tau * mean, cov=D @ cov @ D + D))


def conditional_marginal_loglik(
    y: np.ndarray,
    phi: float,
    model: ModelSpec,
    alpha: float,
    sigma2: float,
    tau: Optional[np.ndarray] = None,
    mask: Optional[np.ndarray] = None,
    beta: Optional[np.ndarray] = None,
    spec: QuadratureSpec = QuadratureSpec(),
    method: str = "auto",
) -> float:
    """log p(y_{1:T} | alpha, sigma2, phi) (beta integrated unless given).

    ``method`` is ``"auto"`` (closed form for the Gaussian family),
    ``"quadrature"`` or ``"closed"``.
    """
    y = np.asarray(y, dtype=float)
    T, n = y.shape
    tau = np.ones_like(y) if tau is None else np.broadcast_to(np.asarray(tau, dtype=float), y.shape)
    mask = np.ones(y.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    obs = mask.ravel()
    if not obs.any():
        return 0.0
    mean, S = latent_moments(model, phi, T, alpha, beta)
    mean_o = mean[obs]
    cov_o = sigma2 * S[np.ix_(obs, obs)]
    y_o = y.ravel()[obs]
    tau_o = tau.ravel()[obs]
    closed = method == "closed" or (method == "auto" and model.family.name == "gaussian")
    if closed:
        if model.family.name != "gaussian":
            raise DomainError("the closed form exists only for the Gaussian family")
        return _inner_gaussian(y_o, tau_o, mean_o, cov_o)
    return _inner_quadrature(y_o, tau_o, mean_o, cov_o, model, spec)


def oracle_marginal_loglik(
    y: np.ndarray,
    phi: float,
    model: ModelSpec,
    tau: Optional[np.ndarray] = None,
    mask: Optional[np.ndarray] = None,
    spec: QuadratureSpec = QuadratureSpec(),
    theta: Optional[Theta] = None,
    method: str = "auto",
) -> float:
    """log p(y_{1:T} | phi) by quadrature over x, alpha and sigma2.

    With ``theta`` fixed only the latent field is integrated.

    Raises:
        DomainError: the instance exceeds ``spec.max_dims`` quadrature dimensions.
    """
    y = np.asarray(y, dtype=float)
    T, n = y.shape
    if mask is not None and not np.asarray(mask, dtype=bool).any():
        return 0.0
    dims = n * T + (0 if theta is not None else 2)
    if dims > spec.max_dims:
        raise DomainError(f"oracle instance has {dims} quadrature dimensions, the guard allows {spec.max_dims}")
    if theta is not None:
        return conditional_marginal_loglik(
            y, phi, model, theta.alpha, theta.sigma2, tau, mask, theta.beta, spec, method
        )

    prior = model.prior
    if prior.s0 <= 0:
        raise DomainError("the oracle needs a proper alpha prior (s0 > 0)")
    a_nodes, a_weights = np.polynomial.hermite_e.hermegauss(spec.alpha)
    a_logw = np.log(a_weights) - 0.5 * np.log(2.0 * np.pi)
    u_nodes, u_weights = np.polynomial.legendre.leggauss(spec.sigma2)
    u = 0.5 * (u_nodes + 1.0)
    s_nodes = invgamma.ppf(u, 0.5 * prior.c0, scale=0.5 * prior.r0)
    s_logw = np.log(0.5 * u_weights)

    terms = []
    for sigma2, s_lw in zip(s_nodes, s_logw):
        centre = prior.a0 / prior.s0
        spread = np.sqrt(sigma2 / prior.s0)
        for z, a_lw in zip(a_nodes, a_logw):
            inner = conditional_marginal_loglik(
                y, phi, model, centre + spread * z, float(sigma2), tau, mask, None, spec, method
            )
            terms.append(s_lw + a_lw + inner)
    return float(logsumexp(terms))


def oracle_log_bayes_factors(
    y: np.ndarray,
    phis: np.ndarray,
    reference: float,
    model: ModelSpec,
    tau: Optional[np.ndarray] = None,
    mask: Optional[np.ndarray] = None,
    spec: QuadratureSpec = QuadratureSpec(),
) -> np.ndarray:
    """log B(phi; reference) over ``phis``."""
    ref = oracle_marginal_loglik(y, reference, model, tau, mask, spec)
    return np.array([oracle_marginal_loglik(y, p, model, tau, mask, spec) - ref for p in phis])
