"""Site layouts and spatial correlation kernels."""
from __future__ import annotations

import logging
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from seqeb.errors import DomainError, SingularityWarning

logger = logging.getLogger(__name__)


class KernelKind(str, Enum):
    """Available correlation kernels."""
    EXPONENTIAL = "exponential"


@dataclass(frozen=True, eq=False)
class SiteSet:
    """Monitoring locations with their Euclidean distance matrix.

    Coordinates are treated as planar, including lon/lat pairs.
    """
    coords: np.ndarray
    ids: tuple[str, ...] = ()
    distances: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2 or coords.shape[0] == 0:
            raise DomainError("site coordinates must be a non-empty (n, d) array")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        if not self.ids:
            object.__setattr__(self, "ids", tuple(str(i) for i in range(coords.shape[0])))
        elif len(self.ids) != coords.shape[0]:
            raise DomainError("site ids and coordinates differ in length")
        dist = cdist(coords, coords)
        np.fill_diagonal(dist, 0.0)
        dist.setflags(write=False)
        object.__setattr__(self, "distances", dist)

    @property
    def n(self) -> int:
        return int(self.coords.shape[0])

    @property
    def dim(self) -> int:
        return int(self.coords.shape[1])

    @classmethod
    def equidistant(cls, n: int, low: float = 0.0, high: float = 1.0) -> "SiteSet":
        """``n`` equally spaced sites on the segment [low, high]."""
        return cls(np.linspace(low, high, n))

    def has_duplicates(self) -> bool:
        off = self.distances + np.eye(self.n)
        return bool(np.any(off == 0.0))

    def subset(self, index: Sequence[int]) -> "SiteSet":
        idx = list(index)
        return SiteSet(self.coords[idx], tuple(self.ids[i] for i in idx))


class CorrelationKernel(ABC):
    """Isotropic correlation function of distance."""

    kind: KernelKind

    @abstractmethod
    def correlate(self, distances: np.ndarray, phi: float) -> np.ndarray:
        """Map a distance array to correlations for range ``phi``."""


class ExponentialKernel(CorrelationKernel):
    """R_ij = exp(-d_ij / phi)."""

    kind = KernelKind.EXPONENTIAL

    def correlate(self, distances: np.ndarray, phi: float) -> np.ndarray:
        return np.exp(-np.asarray(distances, dtype=float) / phi)


def _check_phi(phi: float) -> float:
    phi = float(phi)
    if not np.isfinite(phi) or phi <= 0.0:
        raise DomainError(f"range parameter phi must be positive, got {phi}")
    return phi


def build_correlation(
    sites: SiteSet,
    phi: float,
    kernel: Optional[CorrelationKernel] = None,
    nugget: float = 0.0,
) -> np.ndarray:
    """Correlation matrix R(phi) over ``sites``.

    Duplicate sites make R singular; a :class:`SingularityWarning` is issued
    and the matrix is returned unchanged unless ``nugget`` is positive.
    """
    phi = _check_phi(phi)
    kernel = kernel or ExponentialKernel()
    R = kernel.correlate(sites.distances, phi)
    R = 0.5 * (R + R.T)
    np.fill_diagonal(R, 1.0)
    if sites.has_duplicates():
        logger.warning("coincident sites make R(phi=%g) singular", phi)
        warnings.warn("coincident sites: correlation matrix is singular", SingularityWarning, stacklevel=2)
    if nugget > 0.0:
        R = R + nugget * np.eye(sites.n)
    return R


def cross_correlation(
    a: SiteSet,
    b: SiteSet,
    phi: float,
    kernel: Optional[CorrelationKernel] = None,
) -> np.ndarray:
    """Correlations between every site of ``a`` (rows) and ``b`` (columns)."""
    phi = _check_phi(phi)
    kernel = kernel or ExponentialKernel()
    return kernel.correlate(cdist(a.coords, b.coords), phi)
