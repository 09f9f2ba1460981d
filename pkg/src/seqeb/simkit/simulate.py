"""Forward simulation of the latent AR field and its observations."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
import pandas as pd

from seqeb.model import ModelSpec
from seqeb.simkit.scenario import Scenario
from seqeb.spatial.gaussian import mvn_sample
from seqeb.spatial.kernels import SiteSet
from seqeb.spatial.observation import ObservationBatch, ObservationModel

CANONICAL_COLUMNS = ("site", "day", "coord_x", "coord_y", "count", "exposure")


@dataclass(frozen=True, eq=False)
class SimulatedData:
    """x is (T+1, n) including x_0; y, tau and mask are (T, n) for t = 1..T."""
    scenario: Scenario
    sites: SiteSet
    x: np.ndarray
    y: np.ndarray
    tau: np.ndarray
    mask: np.ndarray

    @property
    def T(self) -> int:
        return int(self.y.shape[0])

    def observation_model(self, model: ModelSpec) -> ObservationModel:
        return ObservationModel(family=model.family, tau=self.tau, mask=self.mask)

    def batches(self) -> Iterator[ObservationBatch]:
        for t in range(1, self.T + 1):
            yield ObservationBatch(t=t, y=self.y[t - 1], tau=self.tau[t - 1], mask=self.mask[t - 1])

    def records(self, rng: np.random.Generator) -> pd.DataFrame:
        """Canonical long-format rows; a site-day with exposure 2 is split into two
        samplings with a binomial split of the count when duplicates are enabled."""
        coords = self.sites.coords
        planar = coords.shape[1] > 1
        rows = []
        split = self.scenario.duplicate_rate > 0
        for t in range(1, self.T + 1):
            for i in np.nonzero(self.mask[t - 1])[0]:
                cx = float(coords[i, 0])
                cy = float(coords[i, 1]) if planar else 0.0
                count = int(self.y[t - 1, i])
                tau = float(self.tau[t - 1, i])
                site = self.sites.ids[i]
                if split and tau == 2.0:
                    first = int(rng.binomial(count, 0.5))
                    rows.append((site, t, cx, cy, first, 1.0))
                    rows.append((site, t, cx, cy, count - first, 1.0))
                else:
                    rows.append((site, t, cx, cy, count, tau))
        frame = pd.DataFrame(rows, columns=list(CANONICAL_COLUMNS))
        return frame if planar else frame.drop(columns="coord_y")


def simulate(scenario: Scenario, rng: np.random.Generator) -> SimulatedData:
    """x_0 = G_0 beta + sigma eps_0, x_t = G_t beta + alpha (x_{t-1} - G_{t-1} beta) + sigma eps_t,
    y_t ~ family(tau, x_t) independently over observed sites."""
    model = scenario.model()
    T, n = scenario.T, scenario.n
    beta = np.asarray(scenario.beta, dtype=float)
    fac = model.factorize(scenario.phi)
    Gs = model.designs(T)
    trend = Gs @ beta
    x = np.empty((T + 1, n))
    x[0] = mvn_sample(trend[0], scenario.sigma2, fac, rng)
    for t in range(1, T + 1):
        mean = trend[t] + scenario.alpha * (x[t - 1] - trend[t - 1])
        x[t] = mvn_sample(mean, scenario.sigma2, fac, rng)

    tau = np.full((T, n), float(scenario.tau))
    if scenario.duplicate_rate > 0:
        tau = tau + (rng.uniform(size=(T, n)) < scenario.duplicate_rate)
    mask = np.ones((T, n), dtype=bool)
    if scenario.missing_rate > 0:
        mask = rng.uniform(size=(T, n)) >= scenario.missing_rate
        empty = np.nonzero(~mask.any(axis=1))[0]
        mask[empty, rng.integers(n, size=empty.size)] = True
    y = model.family.sample(x[1:], tau, rng)
    y = np.where(mask, y, 0)
    return SimulatedData(scenario=scenario, sites=model.sites, x=x, y=y, tau=tau, mask=mask)
