"""Run state and the per-step summary streamed to results files."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from seqeb.chain import ChainState
from seqeb.config import RunConfig
from seqeb.eb.estimate import BayesFactorTable
from seqeb.eb.grid import GridSpec
from seqeb.model import ModelSpec


@dataclass(frozen=True, eq=False)
class StepSummary:
    """Estimates after one engine step."""
    t: int
    phi_hat: float
    ci: tuple[float, float]
    theta_hat: np.ndarray
    x_hat: np.ndarray
    mean_ess: float
    eb_ess: float
    mean_delta2: float
    step_seconds: float
    table: BayesFactorTable

    @property
    def alpha(self) -> float:
        return float(self.theta_hat[0])

    @property
    def beta(self) -> np.ndarray:
        return self.theta_hat[1:-1]

    @property
    def sigma2(self) -> float:
        return float(self.theta_hat[-1])

    def row(self) -> dict[str, Any]:
        """One results-file row."""
        out: dict[str, Any] = {"t": self.t, "alpha": self.alpha}
        for i, b in enumerate(self.beta):
            out[f"beta_{i}"] = float(b)
        out.update(
            sigma2=self.sigma2,
            phi=self.phi_hat,
            ci_lo=self.ci[0],
            ci_hi=self.ci[1],
            mean_ess=self.mean_ess,
            eb_ess=self.eb_ess,
            step_seconds=self.step_seconds,
        )
        return out


@dataclass(frozen=True, eq=False)
class RunState:
    """Chain population at time t plus the latest estimate.

    ``chains`` is in population order: component k's L_k chains are
    contiguous, matching ``grid.labels()``. ``history`` is filled only when
    the engine keeps it; results are normally streamed out instead.
    """
    t: int
    seed: int
    config: RunConfig
    model: ModelSpec
    grid: GridSpec
    chains: tuple[ChainState, ...]
    weights: Optional[np.ndarray] = None
    phi_hat: Optional[float] = None
    history: tuple[StepSummary, ...] = ()

    @property
    def C(self) -> int:
        return len(self.chains)

    @property
    def nbytes(self) -> int:
        """Resident working-state size (history excluded)."""
        extra = 0 if self.weights is None else int(self.weights.nbytes)
        return sum(c.nbytes for c in self.chains) + extra

    def component(self, k: int) -> tuple[ChainState, ...]:
        start = int(self.grid.chains[:k].sum())
        return self.chains[start : start + int(self.grid.chains[k])]

    def xs(self) -> np.ndarray:
        return np.stack([c.x for c in self.chains])

    def thetas(self) -> np.ndarray:
        return np.stack([c.theta.to_vector() for c in self.chains])

    @property
    def last(self) -> Optional[StepSummary]:
        return self.history[-1] if self.history else None
