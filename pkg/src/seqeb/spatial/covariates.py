"""Covariate design matrices G_t."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from seqeb.errors import ConfigError


class CovariateTerm(str, Enum):
    """Columns a design matrix may contain."""
    INTERCEPT = "intercept"
    DISTANCE = "distance"
    TIME = "time"


@dataclass(frozen=True, eq=False)
class CovariateBuilder:
    """Builds G_t = [terms...] for every site at time index t.

    ``distance`` is the planar distance from ``reference``; ``time`` is
    ``t * time_scale`` with t counting observation steps (t = 0 is the
    initial state).
    """
    terms: tuple[CovariateTerm, ...]
    coords: np.ndarray
    reference: tuple[float, ...] = (0.0, 0.0)
    time_scale: float = 1.0

    def __post_init__(self) -> None:
        terms = tuple(CovariateTerm(t) for t in self.terms)
        if not terms:
            raise ConfigError("at least one covariate term is required")
        if len(set(terms)) != len(terms):
            raise ConfigError(f"duplicate covariate terms in {[t.value for t in terms]}")
        object.__setattr__(self, "terms", terms)
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        object.__setattr__(self, "coords", coords)
        ref = np.zeros(coords.shape[1])
        given = np.asarray(self.reference, dtype=float).ravel()
        ref[: min(len(given), len(ref))] = given[: len(ref)]
        dist = np.sqrt(np.sum((coords - ref) ** 2, axis=1))
        object.__setattr__(self, "_distance", dist)

    @classmethod
    def from_names(
        cls,
        names: Sequence[str],
        coords: np.ndarray,
        reference: Sequence[float] = (0.0, 0.0),
        time_scale: float = 1.0,
    ) -> "CovariateBuilder":
        try:
            terms = tuple(CovariateTerm(str(name).lower()) for name in names)
        except ValueError as exc:
            valid = ", ".join(t.value for t in CovariateTerm)
            raise ConfigError(f"unknown covariate term ({exc}); valid terms: {valid}") from exc
        return cls(terms=terms, coords=coords, reference=tuple(reference), time_scale=time_scale)

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def n(self) -> int:
        return int(self.coords.shape[0])

    @property
    def names(self) -> list[str]:
        return [t.value for t in self.terms]

    def __call__(self, t: int) -> np.ndarray:
        cols = []
        for term in self.terms:
            if term is CovariateTerm.INTERCEPT:
                cols.append(np.ones(self.n))
            elif term is CovariateTerm.DISTANCE:
                cols.append(self._distance)  # type: ignore[attr-defined]
            else:
                cols.append(np.full(self.n, float(t) * self.time_scale))
        return np.column_stack(cols)

    def for_sites(self, coords: np.ndarray) -> "CovariateBuilder":
        """Same design at other locations (prediction targets)."""
        return CovariateBuilder(self.terms, coords, self.reference, self.time_scale)
