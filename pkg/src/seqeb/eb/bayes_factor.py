"""Bayes factor estimators over the fine grid, evaluated in log space."""
from __future__ import annotations

from typing import Optional

import numpy as np
from scipy.special import logsumexp

from seqeb.errors import DomainError, NumericalError


def mixture_bayes_factor(
    loglik_eval: np.ndarray,
    loglik_coarse: np.ndarray,
    log_b: np.ndarray,
    chains: np.ndarray,
    reference_index: Optional[int] = None,
) -> np.ndarray:
    """log B(phi; phi_ref) for each evaluation column.

    B(phi) = sum_c p(x_c|theta_c, phi) / sum_k (L_k / b_k) p(x_c|theta_c, phi_k).
    With ``reference_index`` the result is shifted so that the reference
    column is exactly 0 (it equals b_ref = 1 up to the solver tolerance).

    Args:
        loglik_eval: (C, J) or (C,) log-likelihoods at the evaluation points.
        loglik_coarse: (C, K) log-likelihoods at the coarse points.
        log_b: (K,) coarse log Bayes factors.
        chains: (K,) chain counts L_k.
    """
    loglik_eval = np.asarray(loglik_eval, dtype=float)
    single = loglik_eval.ndim == 1
    if single:
        loglik_eval = loglik_eval[:, None]
    loglik_coarse = np.asarray(loglik_coarse, dtype=float)
    if loglik_eval.shape[0] != loglik_coarse.shape[0]:
        raise DomainError("evaluation and coarse log-likelihoods cover different chains")
    log_den = logsumexp(np.log(np.asarray(chains, dtype=float)) - np.asarray(log_b) + loglik_coarse, axis=1)
    if not np.all(np.isfinite(log_den)):
        raise NumericalError("mixture denominator vanished for at least one chain")
    out = logsumexp(loglik_eval - log_den[:, None], axis=0)
    if reference_index is not None:
        out = out - out[reference_index]
    return float(out[0]) if single else out


def simplified_bayes_factor(loglik_eval: np.ndarray, loglik_ref: np.ndarray) -> np.ndarray:
    """Single-reference estimator (1/L) sum_l p(x_l|theta_l, phi) / p(x_l|theta_l, phi_ref)."""
    loglik_eval = np.asarray(loglik_eval, dtype=float)
    ratio = loglik_eval - np.asarray(loglik_ref, dtype=float)[:, None]
    return logsumexp(ratio, axis=0) - np.log(ratio.shape[0])
