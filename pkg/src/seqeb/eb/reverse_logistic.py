"""Reverse logistic regression for the coarse-grid Bayes factors.

Pooled draws from K components with unnormalized densities q_k are
classified by their component; maximizing the multinomial log-likelihood in
eta = log b (reference pinned at 0) estimates the normalizing-constant ratios.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from seqeb.errors import ConvergenceError, DomainError, NumericalError

logger = logging.getLogger(__name__)

RLR_TOL = 1e-10
RLR_MAX_ITER = 100


@dataclass(frozen=True)
class ReverseLogisticResult:
    log_b: np.ndarray
    iterations: int
    objective: float


def _objective(eta: np.ndarray, loglik: np.ndarray, labels: np.ndarray, log_lam: np.ndarray) -> tuple[float, np.ndarray]:
    a = log_lam + loglik - eta
    lse = logsumexp(a, axis=1)
    value = float(np.sum(a[np.arange(a.shape[0]), labels] - lse))
    return value, a - lse[:, None]


def reverse_logistic_fit(
    loglik: np.ndarray,
    labels: np.ndarray,
    lambdas: Optional[np.ndarray] = None,
    reference: int = 0,
    tol: float = RLR_TOL,
    max_iter: int = RLR_MAX_ITER,
) -> ReverseLogisticResult:
    """Maximize the reverse logistic log-likelihood by Newton's method.

    Args:
        loglik: (C, K) log q_k at every pooled draw.
        labels: (C,) component each draw came from.
        lambdas: mixture proportions; defaults to the label frequencies.
        reference: component whose log b is pinned to 0.

    Returns:
        ReverseLogisticResult with log b over the K components.

    Raises:
        NumericalError: a row of ``loglik`` is not finite.
        ConvergenceError: the gradient did not fall below ``tol``.
    """
    loglik = np.asarray(loglik, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if loglik.ndim != 2 or labels.shape != (loglik.shape[0],):
        raise DomainError(f"loglik {loglik.shape} and labels {labels.shape} do not align")
    C, K = loglik.shape
    bad = np.nonzero(~np.all(np.isfinite(loglik), axis=1))[0]
    if bad.size:
        raise NumericalError(f"non-finite log-likelihood for chain row {int(bad[0])} (component {int(labels[bad[0]])})")
    counts = np.bincount(labels, minlength=K).astype(float)
    lam = counts / C if lambdas is None else np.asarray(lambdas, dtype=float)
    if K == 1:
        return ReverseLogisticResult(log_b=np.zeros(1), iterations=0, objective=0.0)

    log_lam = np.log(lam)
    free = np.array([k for k in range(K) if k != reference])
    eta = np.zeros(K)
    value, logp = _objective(eta, loglik, labels, log_lam)
    for iteration in range(max_iter + 1):
        p = np.exp(logp)
        grad = p.sum(axis=0) - counts
        if np.max(np.abs(grad[free])) < tol:
            return ReverseLogisticResult(log_b=eta, iterations=iteration, objective=value)
        if iteration == max_iter:
            break
        H = p.T @ p - np.diag(p.sum(axis=0))
        H_ff = H[np.ix_(free, free)]
        step = np.zeros(K)
        step[free] = np.linalg.solve(H_ff, grad[free])
        scale = 1.0
        while True:
            trial = eta - scale * step
            trial_value, trial_logp = _objective(trial, loglik, labels, log_lam)
            if trial_value >= value or scale < 1e-12:
                break
            scale *= 0.5
        if np.max(np.abs(trial - eta)) < 1e-15:
            logger.debug("reverse logistic step vanished at |grad|=%.2e", np.max(np.abs(grad[free])))
            return ReverseLogisticResult(log_b=eta, iterations=iteration, objective=value)
        eta, value, logp = trial, trial_value, trial_logp

    raise ConvergenceError(
        f"reverse logistic regression did not converge in {max_iter} iterations "
        "(components may not overlap)",
        last_iterate=eta,
    )

