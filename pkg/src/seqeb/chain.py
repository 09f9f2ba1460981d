"""Per-chain state and the read-only context shared by one engine step."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from seqeb.proposal.fit import ProposalMode
from seqeb.spatial.gaussian import GaussianFactorization
from seqeb.spatial.observation import ObservationBatch, ObservationFamily
from seqeb.suffstats.accumulators import PhiLikStats, TemporalSuffStats, Theta
from seqeb.suffstats.conditionals import PriorHyper


@dataclass(frozen=True, eq=False)
class ChainState:
    """One chain (k, l): current field, parameters and statistics.

    Updates return new objects; a parent state may be shared by several
    children after the bootstrap.
    """
    k: int
    l: int  # noqa: E741
    phi_index: int
    x: np.ndarray
    theta: Theta
    z: PhiLikStats
    last_ess: float = float("nan")
    last_delta2: float = float("nan")

    @property
    def u(self) -> TemporalSuffStats:
        """Temporal statistics: the z row at the chain's own phi."""
        return self.z.entry(self.phi_index)

    @property
    def t(self) -> int:
        return self.z.t

    @property
    def nbytes(self) -> int:
        return int(self.x.nbytes + self.theta.to_vector().nbytes + self.z.nbytes + 2 * 8)

    def relabel(self, l: int) -> "ChainState":  # noqa: E741
        return replace(self, l=l)


@dataclass(frozen=True, eq=False)
class StepContext:
    """Read-only inputs shared by every chain at one time step."""
    batch: ObservationBatch
    G_t: np.ndarray
    G_prev: np.ndarray
    WG_t: np.ndarray
    WG_prev: np.ndarray
    factors: tuple[GaussianFactorization, ...]
    whiteners: np.ndarray
    prior: PriorHyper
    family: ObservationFamily
    mode: ProposalMode = ProposalMode.MEAN_ONLY
    particles: int = 100
    gibbs_iters: int = 50
    newton_tol: float = 1e-8
    newton_max_iter: int = 50
    max_halvings: int = 30

    @property
    def t(self) -> int:
        return self.batch.t
