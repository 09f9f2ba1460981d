"""Cholesky factorizations and multivariate normal densities.

Every solve goes through the triangular factor; no dense inverse of R is formed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import lapack, solve_triangular

from seqeb.errors import DomainError, FactorizationError

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True, eq=False)
class GaussianFactorization:
    """Lower Cholesky factor of a correlation matrix and its log-determinant.

    ``whitener`` is L^-1 obtained by a triangular solve, so that
    ``whitener @ v`` whitens ``v`` against R.
    """
    lower: np.ndarray
    logdet: float
    phi: Optional[float] = None
    whitener: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.lower.setflags(write=False)
        w = solve_triangular(self.lower, np.eye(self.n), lower=True)
        w.setflags(write=False)
        object.__setattr__(self, "whitener", w)

    @property
    def n(self) -> int:
        return int(self.lower.shape[0])

    def whiten(self, v: np.ndarray) -> np.ndarray:
        """L^-1 v for a vector or for each column of a matrix."""
        return solve_triangular(self.lower, v, lower=True)

    def solve(self, v: np.ndarray) -> np.ndarray:
        """R^-1 v through two triangular solves."""
        return solve_triangular(self.lower, self.whiten(v), lower=True, trans="T")

    def reconstruct(self) -> np.ndarray:
        return self.lower @ self.lower.T


def factorize(R: np.ndarray, phi: Optional[float] = None, sym_tol: float = 1e-12) -> GaussianFactorization:
    """Cholesky-factorize a symmetric positive-definite matrix.

    Raises:
        DomainError: R is not square or not symmetric.
        FactorizationError: R is not positive definite; ``pivot`` is 1-based.
    """
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {R.shape}")
    scale = max(1.0, float(np.max(np.abs(R)))) if R.size else 1.0
    if not np.allclose(R, R.T, rtol=0.0, atol=sym_tol * scale):
        raise DomainError("matrix is not symmetric")
    c, info = lapack.dpotrf(R, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise FactorizationError("matrix is not positive definite", pivot=int(info))
    if info < 0:
        raise DomainError(f"invalid argument {-info} passed to the Cholesky routine")
    lower = np.tril(c)
    logdet = 2.0 * float(np.sum(np.log(np.diag(lower))))
    return GaussianFactorization(lower=lower, logdet=logdet, phi=phi)


def _check_scale(sigma2: float, allow_zero: bool = False) -> float:
    sigma2 = float(sigma2)
    if not np.isfinite(sigma2) or sigma2 < 0.0 or (sigma2 == 0.0 and not allow_zero):
        raise DomainError(f"scale sigma2 must be positive, got {sigma2}")
    return sigma2


def mvn_logpdf(x: np.ndarray, mean: np.ndarray, sigma2: float, fac: GaussianFactorization) -> np.ndarray | float:
    """Log density of N(mean, sigma2 * R) at ``x``.

    ``x`` may be a single n-vector or an (N, n) batch; the result is a float
    or an (N,) array accordingly.
    """
    sigma2 = _check_scale(sigma2)
    x = np.asarray(x, dtype=float)
    mean = np.asarray(mean, dtype=float)
    n = fac.n
    if x.shape[-1] != n or mean.shape[-1] != n:
        raise DomainError(f"dimension mismatch: x {x.shape}, mean {mean.shape}, R {n}x{n}")
    resid = np.atleast_2d(x - mean)
    a = fac.whiten(resid.T)
    quad = np.sum(a * a, axis=0)
    out = -0.5 * n * (LOG_2PI + np.log(sigma2)) - 0.5 * fac.logdet - 0.5 * quad / sigma2
    if x.ndim == 1:
        return float(out[0])
    return out


def mvn_sample(
    mean: np.ndarray,
    sigma2: float,
    fac: GaussianFactorization,
    rng: np.random.Generator,
    size: Optional[int] = None,
) -> np.ndarray:
    """Draw mean + sigma * L z with z standard normal.

    With ``size`` the result is (size, n); ``sigma2 == 0`` returns the mean.
    """
    sigma2 = _check_scale(sigma2, allow_zero=True)
    mean = np.asarray(mean, dtype=float)
    n = fac.n
    if mean.shape[-1] != n:
        raise DomainError(f"dimension mismatch: mean {mean.shape}, R {n}x{n}")
    shape = (n,) if size is None else (size, n)
    if sigma2 == 0.0:
        return np.broadcast_to(mean, shape).copy()
    z = rng.standard_normal(shape)
    return mean + np.sqrt(sigma2) * (z @ fac.lower.T)
