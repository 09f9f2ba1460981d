"""Exponential-family observation models with exposures and missingness."""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln

from seqeb.errors import DataError, DomainError


class ObservationFamily(ABC):
    """Canonical-link family: log p(y|x) = y g(x) - tau b(x) + c(y, tau) with g(x) = x."""

    name: str

    def g(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float)

    @abstractmethod
    def b(self, x: np.ndarray) -> np.ndarray:
        """Cumulant function."""

    @abstractmethod
    def h(self, x: np.ndarray) -> np.ndarray:
        """Inverse link: mean of y per unit exposure."""

    @abstractmethod
    def log_normalizer(self, y: np.ndarray, tau: np.ndarray) -> np.ndarray:
        """c(y, tau), evaluated only where observed."""

    @abstractmethod
    def nll_derivatives(
        self, y: np.ndarray, x: np.ndarray, tau: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """First three x-derivatives of -log p(y|x) per site."""

    @abstractmethod
    def sample(self, x: np.ndarray, tau: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Draw observations given the latent field."""

    def validate(self, y: np.ndarray, mask: np.ndarray) -> None:
        """Reject impossible observed values."""


class PoissonFamily(ObservationFamily):
    """y ~ Poisson(tau * exp(x))."""

    name = "poisson"

    def b(self, x: np.ndarray) -> np.ndarray:
        return np.exp(x)

    def h(self, x: np.ndarray) -> np.ndarray:
        return np.exp(x)

    def log_normalizer(self, y: np.ndarray, tau: np.ndarray) -> np.ndarray:
        return y * np.log(tau) - gammaln(y + 1.0)

    def nll_derivatives(self, y, x, tau):  # type: ignore[no-untyped-def]
        mu = tau * np.exp(x)
        return mu - y, mu, mu

    def sample(self, x: np.ndarray, tau: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return rng.poisson(np.asarray(tau) * np.exp(x))

    def validate(self, y: np.ndarray, mask: np.ndarray) -> None:
        observed = np.asarray(y)[mask]
        if np.any(observed < 0):
            raise DataError("Poisson counts must be nonnegative")
        if np.any(observed != np.round(observed)):
            raise DataError("Poisson counts must be integers")


class GaussianFamily(ObservationFamily):
    """Identity-link Gaussian: y ~ N(tau * x, tau) in canonical form."""

    name = "gaussian"

    def b(self, x: np.ndarray) -> np.ndarray:
        return 0.5 * np.square(x)

    def h(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float)

    def log_normalizer(self, y: np.ndarray, tau: np.ndarray) -> np.ndarray:
        return -0.5 * np.square(y) / tau - 0.5 * np.log(2.0 * np.pi * tau)

    def nll_derivatives(self, y, x, tau):  # type: ignore[no-untyped-def]
        tau = np.broadcast_to(tau, np.shape(x))
        return tau * x - y, tau.astype(float), np.zeros(np.shape(x))

    def sample(self, x: np.ndarray, tau: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        return tau * x + np.sqrt(tau) * rng.standard_normal(np.shape(x))


@dataclass(frozen=True, eq=False)
class ObservationBatch:
    """Observations of every site at one time step."""
    t: int
    y: np.ndarray
    tau: np.ndarray
    mask: np.ndarray

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float)
        tau = np.broadcast_to(np.asarray(self.tau, dtype=float), y.shape).copy()
        mask = np.asarray(self.mask, dtype=bool)
        if y.shape != mask.shape:
            raise DomainError(f"y {y.shape} and mask {mask.shape} differ in shape")
        y = np.where(mask, y, 0.0)
        if np.any(tau[mask] <= 0.0):
            raise DataError(f"exposure must be positive wherever observed (t={self.t})")
        for arr in (y, tau, mask):
            arr.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "mask", mask)

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    @property
    def n_observed(self) -> int:
        return int(self.mask.sum())

    @classmethod
    def empty(cls, t: int, n: int) -> "ObservationBatch":
        return cls(t=t, y=np.zeros(n), tau=np.ones(n), mask=np.zeros(n, dtype=bool))


@dataclass(frozen=True, eq=False)
class ObservationModel:
    """Family plus exposures and missingness over times 1..T (row t-1)."""
    family: ObservationFamily
    tau: np.ndarray
    mask: np.ndarray

    def batch(self, t: int, y: np.ndarray) -> ObservationBatch:
        return ObservationBatch(t=t, y=y, tau=self.tau[t - 1], mask=self.mask[t - 1])


def batch_loglik(batch: ObservationBatch, x: np.ndarray, family: ObservationFamily) -> np.ndarray | float:
    """Sum over observed sites of y g(x) - tau b(x) + c(y, tau).

    ``x`` may be an (N, n) batch of fields.
    """
    mask = batch.mask
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != batch.n:
        raise DomainError(f"dimension mismatch: x {x.shape}, observations {batch.n}")
    if not mask.any():
        return 0.0 if x.ndim == 1 else np.zeros(x.shape[0])
    y = batch.y[mask]
    tau = batch.tau[mask]
    xo = x[..., mask]
    terms = y * family.g(xo) - tau * family.b(xo)
    const = float(np.sum(family.log_normalizer(y, tau)))
    out = np.sum(terms, axis=-1) + const
    return float(out) if x.ndim == 1 else out


def obs_loglik(
    y: np.ndarray,
    x: np.ndarray,
    model: ObservationModel,
    t: int,
    mask: Optional[np.ndarray] = None,
) -> float:
    """Observation log-likelihood at time ``t``; masked sites contribute zero.

    ``mask`` narrows the model's missingness further (used for additivity checks).
    """
    batch = model.batch(t, y)
    if mask is not None:
        batch = ObservationBatch(t=t, y=batch.y, tau=batch.tau, mask=batch.mask & np.asarray(mask, dtype=bool))
    model.family.validate(batch.y, batch.mask)
    return float(batch_loglik(batch, x, model.family))
