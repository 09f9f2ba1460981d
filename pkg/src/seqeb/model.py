"""The generative model: sites, covariates, kernel, observation family and prior."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from seqeb.spatial.covariates import CovariateBuilder
from seqeb.spatial.factory import create_family, create_kernel
from seqeb.spatial.gaussian import GaussianFactorization, factorize
from seqeb.spatial.kernels import CorrelationKernel, SiteSet, build_correlation
from seqeb.spatial.observation import ObservationFamily
from seqeb.suffstats.conditionals import PriorHyper

if TYPE_CHECKING:
    from seqeb.config import RunConfig


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Everything needed to evaluate or simulate the state-space model.

    Factorizations of R(phi) are cached per phi value.
    """
    sites: SiteSet
    design: CovariateBuilder
    kernel: CorrelationKernel
    family: ObservationFamily
    prior: PriorHyper
    nugget: float = 0.0
    _factors: dict[float, GaussianFactorization] = field(default_factory=dict, init=False, repr=False)

    @property
    def n(self) -> int:
        return self.sites.n

    @property
    def m(self) -> int:
        return self.design.m

    def G(self, t: int) -> np.ndarray:
        """Design matrix G_t (n x m)."""
        return self.design(t)

    def designs(self, T: int) -> np.ndarray:
        """Stacked G_0..G_T, shape (T+1, n, m)."""
        return np.stack([self.design(t) for t in range(T + 1)])

    def correlation(self, phi: float) -> np.ndarray:
        return build_correlation(self.sites, phi, self.kernel, self.nugget)

    def factorize(self, phi: float) -> GaussianFactorization:
        key = float(phi)
        fac = self._factors.get(key)
        if fac is None:
            fac = factorize(self.correlation(key), phi=key)
            self._factors[key] = fac
        return fac

    def factorizations(self, phis: Sequence[float]) -> tuple[GaussianFactorization, ...]:
        return tuple(self.factorize(p) for p in phis)

    @classmethod
    def from_config(cls, config: "RunConfig", sites: SiteSet) -> "ModelSpec":
        model = config.model
        design = CovariateBuilder.from_names(model.covariates, sites.coords, model.reference, model.time_scale)
        return cls(
            sites=sites,
            design=design,
            kernel=create_kernel(model.kernel),
            family=create_family(model.family),
            prior=config.prior,
            nugget=model.nugget,
        )
