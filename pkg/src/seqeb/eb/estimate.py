"""Grid argmax, credible intervals and post-estimation reweighting."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.integrate import cumulative_trapezoid
from scipy.special import logsumexp

from seqeb.errors import DomainError

logger = logging.getLogger(__name__)

DEFAULT_LEVEL = 0.99


@dataclass(frozen=True, eq=False)
class BayesFactorTable:
    """log Bayes factors over the fine grid at one time step."""
    t: int
    phis: np.ndarray
    log_bf: np.ndarray
    coarse_phis: np.ndarray
    coarse_log_b: np.ndarray
    phi_hat: float
    ci: tuple[float, float]
    level: float = DEFAULT_LEVEL
    flat: bool = False

    @property
    def phi_hat_index(self) -> int:
        return int(np.argmin(np.abs(self.phis - self.phi_hat)))

    def rows(self) -> list[dict[str, Any]]:
        """Long-format rows (t, phi, log_bf, coarse)."""
        coarse = set(np.round(self.coarse_phis, 12).tolist())
        return [
            {"t": self.t, "phi": float(p), "log_bf": float(v), "coarse": int(round(float(p), 12) in coarse)}
            for p, v in zip(self.phis, self.log_bf)
        ]


def credible_interval(phis: np.ndarray, log_bf: np.ndarray, level: float = DEFAULT_LEVEL) -> tuple[float, float]:
    """Equal-tailed interval of the grid posterior proportional to exp(log_bf).

    The cdf is built with trapezoidal weights and inverted by monotone
    piecewise-cubic interpolation of phi against the cdf.
    """
    if not 0.0 < level < 1.0:
        raise DomainError(f"credible level must lie in (0, 1), got {level}")
    phis = np.asarray(phis, dtype=float)
    if phis.size == 1:
        return float(phis[0]), float(phis[0])
    dens = np.exp(np.asarray(log_bf, dtype=float) - np.max(log_bf))
    cdf = cumulative_trapezoid(dens, phis, initial=0.0)
    cdf = cdf / cdf[-1]

    # keep nodes adjacent to a rise of the cdf; plateau interiors carry no mass
    rises = np.diff(cdf) > 0
    keep = np.zeros(phis.size, dtype=bool)
    keep[:-1] |= rises
    keep[1:] |= rises
    x, idx = np.unique(cdf[keep], return_inverse=True)
    y = np.bincount(idx, weights=phis[keep]) / np.bincount(idx)
    if x.size < 2:
        return float(y[0]), float(y[0])
    inverse = PchipInterpolator(x, y, extrapolate=False)
    lower_q = 0.5 * (1.0 - level)
    bounds = inverse(np.clip([lower_q, 1.0 - lower_q], x[0], x[-1]))
    return float(bounds[0]), float(bounds[1])


def estimate_phi(phis: np.ndarray, log_bf: np.ndarray, level: float = DEFAULT_LEVEL) -> tuple[float, tuple[float, float]]:
    """Grid argmax (ties go to the smaller phi) and credible interval."""
    phis = np.asarray(phis, dtype=float)
    log_bf = np.asarray(log_bf, dtype=float)
    if not np.all(np.isfinite(log_bf)):
        raise DomainError("log Bayes factors must be finite over the grid")
    phi_hat = float(phis[int(np.argmax(log_bf))])
    if np.ptp(log_bf) == 0.0:
        logger.warning("flat Bayes factor table: the credible interval spans the grid")
    return phi_hat, credible_interval(phis, log_bf, level)


@dataclass(frozen=True, eq=False)
class EBEstimate:
    """Reweighted point estimates after plugging in phi_hat."""
    x_hat: np.ndarray
    theta_hat: np.ndarray
    weights: np.ndarray
    ess: float


def reweight_and_estimate(
    loglik_fine: np.ndarray,
    coarse_index: np.ndarray,
    lambdas: np.ndarray,
    log_bf: np.ndarray,
    phi_hat_index: int,
    xs: np.ndarray,
    thetas: np.ndarray,
    ess_floor: float = 0.0,
) -> EBEstimate:
    """Importance weights of the pooled chains for the mixture at phi_hat.

    log v_c = [l_c(phi_hat) - log B(phi_hat)] - logsumexp_k [log lambda_k + l_c(phi_k) - log B(phi_k)].

    Args:
        loglik_fine: (C, J) chain log-likelihoods over the fine grid.
        coarse_index: fine-grid indices of the coarse points.
        xs: (C, n) current fields; thetas: (C, p) parameter vectors.
        ess_floor: fraction of C below which a low-ESS warning is logged.
    """
    loglik_fine = np.asarray(loglik_fine, dtype=float)
    coarse_index = np.asarray(coarse_index, dtype=int)
    num = loglik_fine[:, phi_hat_index] - log_bf[phi_hat_index]
    den = logsumexp(np.log(lambdas) + loglik_fine[:, coarse_index] - log_bf[coarse_index], axis=1)
    log_v = num - den
    w = np.exp(log_v - logsumexp(log_v))
    w = w / w.sum()
    ess = float(1.0 / np.sum(w * w))
    C = w.shape[0]
    if ess < ess_floor * C:
        logger.warning("EB reweighting ESS %.1f is below the floor %.1f", ess, ess_floor * C)
    return EBEstimate(x_hat=w @ np.asarray(xs), theta_hat=w @ np.asarray(thetas), weights=w, ess=ess)
