"""Skew-normal marginals: moment maps, density, CDF via Owen's T and quantiles."""
from __future__ import annotations

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri, owens_t

from seqeb.errors import ConvergenceError

SQRT_2_OVER_PI = float(np.sqrt(2.0 / np.pi))
# Supremum of |skewness| over the skew-normal family.
SKEW_SUPREMUM = 0.5 * (4.0 - np.pi) * (SQRT_2_OVER_PI / np.sqrt(1.0 - 2.0 / np.pi)) ** 3
SKEW_CLAMP = 0.995
DELTA_CLAMP = 1.0 - 1e-10
QUANTILE_TOL = 1e-12
_MAX_BISECTIONS = 200
_LOG_2 = float(np.log(2.0))


def delta_of(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return a / np.sqrt(1.0 + a * a)


def moments(xi: np.ndarray, omega: np.ndarray, a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(mean, variance, skewness) of SN(xi, omega, a)."""
    d = delta_of(a)
    mz = d * SQRT_2_OVER_PI
    var_z = 1.0 - mz * mz
    mean = np.asarray(xi) + np.asarray(omega) * mz
    var = np.asarray(omega) ** 2 * var_z
    skew = 0.5 * (4.0 - np.pi) * mz**3 / var_z**1.5
    return mean, var, skew


def from_moments(mean: np.ndarray, var: np.ndarray, skew: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Invert the moment map; |skew| is clamped below the family supremum."""
    mean = np.asarray(mean, dtype=float)
    sd = np.sqrt(np.asarray(var, dtype=float))
    g = np.clip(np.asarray(skew, dtype=float), -SKEW_CLAMP, SKEW_CLAMP)
    r = np.cbrt(2.0 * np.abs(g) / (4.0 - np.pi))
    mz = r / np.sqrt(1.0 + r * r)
    d = np.minimum(mz / SQRT_2_OVER_PI, DELTA_CLAMP) * np.sign(g)
    mz = np.abs(d) * SQRT_2_OVER_PI
    omega = sd / np.sqrt(1.0 - mz * mz)
    xi = mean - omega * d * SQRT_2_OVER_PI
    a = d / np.sqrt(1.0 - d * d)
    return xi, omega, a


def logpdf(x: np.ndarray, xi: np.ndarray, omega: np.ndarray, a: np.ndarray) -> np.ndarray:
    z = (np.asarray(x, dtype=float) - xi) / omega
    return _LOG_2 - 0.5 * z * z - 0.5 * np.log(2.0 * np.pi) + log_ndtr(a * z) - np.log(omega)


def cdf(x: np.ndarray, xi: np.ndarray, omega: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Phi(z) - 2 T(z, a)."""
    z = (np.asarray(x, dtype=float) - xi) / omega
    return np.clip(ndtr(z) - 2.0 * owens_t(z, a), 0.0, 1.0)


def sf(x: np.ndarray, xi: np.ndarray, omega: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Phi(-z) + 2 T(z, a), accurate in the upper tail."""
    z = (np.asarray(x, dtype=float) - xi) / omega
    return np.clip(ndtr(-z) + 2.0 * owens_t(z, a), 0.0, 1.0)


def _standard_cdf(z: np.ndarray, a: np.ndarray) -> np.ndarray:
    return ndtr(z) - 2.0 * owens_t(z, a)


def ppf(u: np.ndarray, xi: np.ndarray, omega: np.ndarray, a: np.ndarray, tol: float = QUANTILE_TOL) -> np.ndarray:
    """Quantile by bracketed bisection on the standardized variable.

    For a >= 0 the quantile lies between Phi^-1(u) and Phi^-1((1+u)/2);
    negative a is handled by reflection.
    """
    u, xi, omega, a = np.broadcast_arrays(
        np.asarray(u, dtype=float), np.asarray(xi, dtype=float),
        np.asarray(omega, dtype=float), np.asarray(a, dtype=float),
    )
    tiny = np.finfo(float).tiny
    u = np.clip(u, tiny, 1.0 - np.finfo(float).eps)
    neg = a < 0
    ua = np.where(neg, 1.0 - u, u)
    aa = np.abs(a)
    lo = ndtri(ua) - tol
    hi = np.maximum(ndtri(0.5 * (1.0 + ua)), lo + 2 * tol) + tol
    for _ in range(_MAX_BISECTIONS):
        if np.all(hi - lo <= tol):
            break
        mid = 0.5 * (lo + hi)
        below = _standard_cdf(mid, aa) < ua
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    else:
        raise ConvergenceError("skew-normal quantile bisection did not close the bracket")
    z = 0.5 * (lo + hi)
    z = np.where(neg, -z, z)
    return xi + omega * z
