"""Fine and coarse range grids."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from seqeb.errors import ConfigError

MATCH_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Fine grid, coarse subset (as fine indices), reference and chain counts."""
    fine: np.ndarray
    coarse_index: np.ndarray
    reference: int
    chains: np.ndarray

    @property
    def J(self) -> int:
        return int(self.fine.shape[0])

    @property
    def K(self) -> int:
        return int(self.coarse_index.shape[0])

    @property
    def coarse(self) -> np.ndarray:
        return self.fine[self.coarse_index]

    @property
    def reference_phi(self) -> float:
        return float(self.coarse[self.reference])

    @property
    def reference_fine_index(self) -> int:
        return int(self.coarse_index[self.reference])

    @property
    def lambdas(self) -> np.ndarray:
        return self.chains / self.chains.sum()

    @property
    def total_chains(self) -> int:
        return int(self.chains.sum())

    def labels(self) -> np.ndarray:
        """Coarse component of every chain, in population order."""
        return np.repeat(np.arange(self.K), self.chains)

    def restricted_to_reference(self) -> "GridSpec":
        """Single-component grid holding only the reference (simplified estimator)."""
        return GridSpec(
            fine=self.fine,
            coarse_index=self.coarse_index[[self.reference]],
            reference=0,
            chains=self.chains[[self.reference]],
        )

    @classmethod
    def build(
        cls,
        fine: Sequence[float],
        coarse: Sequence[float],
        reference: float,
        chains: Union[int, Sequence[int]],
    ) -> "GridSpec":
        """Validate and snap coarse points onto the fine grid.

        Raises:
            ConfigError: listing every problem found.
        """
        fine_arr = np.asarray(fine, dtype=float)
        coarse_arr = np.atleast_1d(np.asarray(coarse, dtype=float))
        problems: list[str] = []
        if fine_arr.ndim != 1 or fine_arr.size == 0:
            problems.append("grid.fine must contain at least one point")
        elif np.any(fine_arr <= 0) or not np.all(np.isfinite(fine_arr)):
            problems.append("grid.fine points must be positive and finite (phi = 0 is excluded)")
        elif np.any(np.diff(fine_arr) <= 0):
            problems.append("grid.fine must be strictly ascending")
        if coarse_arr.size == 0:
            problems.append("grid.coarse must contain at least one point")

        index: list[int] = []
        if not problems:
            for value in coarse_arr:
                hits = np.nonzero(np.abs(fine_arr - value) <= MATCH_RTOL * max(1.0, abs(value)))[0]
                if hits.size == 0:
                    problems.append(f"grid.coarse point {value:g} is not on the fine grid")
                else:
                    index.append(int(hits[0]))
            if len(set(index)) != len(index):
                problems.append("grid.coarse contains duplicate points")

        counts = np.atleast_1d(np.asarray(chains, dtype=int))
        if counts.size == 1:
            counts = np.full(coarse_arr.size, int(counts[0]))
        if counts.size != coarse_arr.size:
            problems.append(f"monte_carlo.chains has {counts.size} entries for {coarse_arr.size} coarse points")
        elif np.any(counts < 1):
            problems.append("monte_carlo.chains must be >= 1 for every coarse point")

        ref = -1
        if not problems:
            hits = np.nonzero(np.abs(coarse_arr - reference) <= MATCH_RTOL * max(1.0, abs(reference)))[0]
            if hits.size == 0:
                problems.append(f"grid.reference {reference:g} is not one of the coarse points")
            else:
                ref = int(hits[0])

        if problems:
            raise ConfigError("Invalid grid configuration", problems)
        fine_arr = fine_arr.copy()
        fine_arr.setflags(write=False)
        return cls(fine=fine_arr, coarse_index=np.asarray(index, dtype=int), reference=ref, chains=counts)

    @classmethod
    def linspace(cls, low: float, high: float, count: int, coarse: Sequence[float], reference: float, chains: Union[int, Sequence[int]]) -> "GridSpec":
        if count < 1:
            raise ConfigError("Invalid grid configuration", ["grid.fine_count must be >= 1"])
        return cls.build(np.linspace(low, high, count), coarse, reference, chains)
