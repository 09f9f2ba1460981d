"""Simulation scenarios: true parameters, layout, grids and Monte Carlo sizes."""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Any, Optional

import numpy as np

from seqeb.config import (
    EstimatorKind,
    GridConfig,
    InitConfig,
    ModelConfig,
    MonteCarloConfig,
    RunConfig,
)
from seqeb.errors import ConfigError
from seqeb.model import ModelSpec
from seqeb.spatial.kernels import SiteSet

FUKUSHIMA_REFERENCE = (141.0328, 37.4211)
FUKUSHIMA_COARSE = (0.002, 0.018, 0.034, 0.05, 0.066, 0.082, 0.098)
FUKUSHIMA_SITES = (
    (140.9712, 37.4820), (140.9405, 37.5610), (140.8901, 37.6402), (140.9962, 37.3621),
    (140.9318, 37.3057), (140.8123, 37.4455), (140.7512, 37.5930), (140.7024, 37.3840),
    (140.6440, 37.4998), (140.5891, 37.6711), (140.8660, 37.2412), (141.0050, 37.5102),
    (140.9150, 37.7205), (140.6101, 37.2950), (140.5205, 37.4108), (140.7801, 37.7560),
    (140.8455, 37.3301),
)


@dataclass(frozen=True)
class Scenario:
    """A fully specified synthetic experiment; with ``seed`` it fixes the dataset."""
    name: str
    n: int = 11
    T: int = 100
    alpha: float = 0.5
    beta: tuple[float, ...] = (1.0,)
    sigma2: float = 1.0
    phi: float = 0.4
    tau: float = 1.0
    family: str = "poisson"
    covariates: tuple[str, ...] = ("intercept",)
    coords: Optional[tuple[tuple[float, ...], ...]] = None
    reference: tuple[float, ...] = (0.0, 0.0)
    time_scale: float = 1.0
    fine_min: float = 0.2
    fine_max: float = 0.8
    fine_count: int = 41
    coarse: tuple[float, ...] = (0.230, 0.335, 0.440, 0.545, 0.650, 0.755)
    grid_reference: float = 0.230
    chains: int = 100
    particles: int = 100
    gibbs_iters: int = 50
    missing_rate: float = 0.0
    duplicate_rate: float = 0.0
    seed: int = 1

    def __post_init__(self) -> None:
        problems = []
        if self.coords is not None and len(self.coords) != self.n:
            problems.append(f"{len(self.coords)} coordinates for n={self.n} sites")
        if len(self.beta) != len(self.covariates):
            problems.append(f"beta has {len(self.beta)} entries for {len(self.covariates)} covariates")
        if self.T < 1 or self.n < 1:
            problems.append("T and n must be >= 1")
        if self.sigma2 < 0 or self.phi <= 0 or self.tau <= 0:
            problems.append("sigma2 must be >= 0, phi and tau > 0")
        if not 0.0 <= self.missing_rate < 1.0 or not 0.0 <= self.duplicate_rate <= 1.0:
            problems.append("missing_rate must lie in [0, 1) and duplicate_rate in [0, 1]")
        if problems:
            raise ConfigError(f"Invalid scenario '{self.name}'", problems)

    def sites(self) -> SiteSet:
        if self.coords is None:
            return SiteSet.equidistant(self.n)
        ids = tuple(f"S{i + 1:02d}" for i in range(self.n))
        return SiteSet(np.asarray(self.coords, dtype=float), ids)

    def to_config(self, **overrides: Any) -> RunConfig:
        """Run configuration matching this scenario (engine sizes and grids)."""
        config = RunConfig(
            seed=self.seed,
            model=ModelConfig(
                family=self.family,
                covariates=self.covariates,
                reference=self.reference,
                time_scale=self.time_scale,
            ),
            grid=GridConfig(
                fine_min=self.fine_min,
                fine_max=self.fine_max,
                fine_count=self.fine_count,
                coarse=self.coarse,
                reference=self.grid_reference,
            ),
            monte_carlo=MonteCarloConfig(
                chains=(self.chains,), particles=self.particles, gibbs_iters=self.gibbs_iters
            ),
            init=InitConfig(beta=(0.0,) * len(self.covariates)),
        )
        return replace(config, **overrides)

    def model(self, config: Optional[RunConfig] = None) -> ModelSpec:
        return ModelSpec.from_config(config or self.to_config(), self.sites())

    def with_overrides(self, **changes: Any) -> "Scenario":
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        for key, value in out.items():
            if key == "coords" and value is not None:
                out[key] = [list(c) for c in value]
            elif isinstance(value, tuple):
                out[key] = list(value)
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Scenario":
        fields = dict(data)
        for key in ("beta", "covariates", "reference", "coarse"):
            if key in fields:
                fields[key] = tuple(fields[key])
        if fields.get("coords") is not None:
            fields["coords"] = tuple(tuple(c) for c in fields["coords"])
        return cls(**fields)


SCENARIOS: dict[str, Scenario] = {
    "default": Scenario(name="default"),
    "estimation": Scenario(name="estimation", tau=10.0, chains=500),
    "long_run": Scenario(name="long_run", T=1000),
    "fukushima": Scenario(
        name="fukushima",
        n=len(FUKUSHIMA_SITES),
        T=146,
        alpha=0.7,
        beta=(3.0, -2.0, -0.004),
        sigma2=0.2,
        phi=0.05,
        covariates=("intercept", "distance", "time"),
        coords=FUKUSHIMA_SITES,
        reference=FUKUSHIMA_REFERENCE,
        fine_min=0.002,
        fine_max=0.1,
        fine_count=50,
        coarse=FUKUSHIMA_COARSE,
        grid_reference=0.05,
        missing_rate=0.15,
        duplicate_rate=0.1,
    ),
}


def get_scenario(name: str, **overrides: Any) -> Scenario:
    scenario = SCENARIOS.get(name)
    if scenario is None:
        raise ConfigError(f"Unknown scenario: {name}. Available: {', '.join(sorted(SCENARIOS))}.")
    return scenario.with_overrides(**overrides) if overrides else scenario


def simplified_arm(config: RunConfig, phi_ref: float, chains: int) -> RunConfig:
    """Configuration for the single-reference estimator at ``phi_ref``."""
    return replace(
        config,
        grid=replace(config.grid, coarse=(phi_ref,), reference=phi_ref),
        monte_carlo=replace(config.monte_carlo, chains=(chains,)),
        eb=replace(config.eb, estimator=EstimatorKind.SIMPLIFIED),
    )
