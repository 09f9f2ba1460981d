"""Run configuration: TOML blocks, validation and (de)serialization.

Precedence is environment variable > config file > default. Defaults are the
simulation-study settings.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Optional, Union

import numpy as np

from seqeb.config_file import get_config_value, load_config_file
from seqeb.eb.grid import GridSpec
from seqeb.errors import ConfigError, DomainError
from seqeb.proposal.fit import ProposalMode
from seqeb.spatial.covariates import CovariateTerm
from seqeb.spatial.kernels import KernelKind
from seqeb.suffstats.conditionals import PriorHyper

DEFAULT_COARSE = (0.230, 0.335, 0.440, 0.545, 0.650, 0.755)


class EstimatorKind(str, Enum):
    """Bayes factor estimator used by the engine."""
    MIXTURE = "mixture"
    SIMPLIFIED = "simplified"


@dataclass(frozen=True)
class ModelConfig:
    kernel: str = KernelKind.EXPONENTIAL.value
    family: str = "poisson"
    nugget: float = 0.0
    covariates: tuple[str, ...] = ("intercept",)
    reference: tuple[float, ...] = (0.0, 0.0)
    time_scale: float = 1.0


@dataclass(frozen=True)
class GridConfig:
    fine_min: float = 0.2
    fine_max: float = 0.8
    fine_count: int = 41
    coarse: tuple[float, ...] = DEFAULT_COARSE
    reference: float = 0.230


@dataclass(frozen=True)
class MonteCarloConfig:
    chains: tuple[int, ...] = (100,)
    particles: int = 100
    gibbs_iters: int = 50


@dataclass(frozen=True)
class ProposalConfig:
    mode: ProposalMode = ProposalMode.MEAN_ONLY
    newton_tol: float = 1e-8
    newton_max_iter: int = 50
    max_halvings: int = 30


@dataclass(frozen=True)
class EBConfig:
    estimator: EstimatorKind = EstimatorKind.MIXTURE
    ci_level: float = 0.99
    weight_ess_floor: float = 0.01
    rlr_tol: float = 1e-10


@dataclass(frozen=True)
class InitConfig:
    alpha: float = 0.0
    beta: tuple[float, ...] = (0.0,)
    sigma2: float = 1.0


@dataclass(frozen=True)
class McmcConfig:
    """Offline sampler settings; ``fixed_*`` pin a parameter instead of sampling it."""
    burn_in: int = 50
    thin: int = 10
    samples: int = 3000
    phi_prior_mean: float = 0.4
    phi_step: float = 0.2
    x_step: float = 0.5
    accept_low: float = 0.2
    accept_high: float = 0.4
    adapt_every: int = 10
    fixed_alpha: Optional[float] = None
    fixed_sigma2: Optional[float] = None
    fixed_phi: Optional[float] = None


@dataclass(frozen=True)
class RunConfig:
    seed: int = 20240101
    workers: int = 1
    model: ModelConfig = field(default_factory=ModelConfig)
    prior: PriorHyper = field(default_factory=PriorHyper)
    grid: GridConfig = field(default_factory=GridConfig)
    monte_carlo: MonteCarloConfig = field(default_factory=MonteCarloConfig)
    proposal: ProposalConfig = field(default_factory=ProposalConfig)
    eb: EBConfig = field(default_factory=EBConfig)
    init: InitConfig = field(default_factory=InitConfig)
    mcmc: McmcConfig = field(default_factory=McmcConfig)

    @property
    def m(self) -> int:
        return len(self.model.covariates)

    def grid_spec(self) -> GridSpec:
        g = self.grid
        spec = GridSpec.linspace(g.fine_min, g.fine_max, g.fine_count, g.coarse, g.reference, self.monte_carlo.chains)
        if self.eb.estimator is EstimatorKind.SIMPLIFIED:
            return spec.restricted_to_reference()
        return spec

    def init_beta(self) -> np.ndarray:
        beta = np.asarray(self.init.beta, dtype=float)
        return np.full(self.m, float(beta[0])) if beta.size == 1 else beta

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"seed": self.seed, "workers": self.workers}
        for name in ("model", "grid", "monte_carlo", "proposal", "eb", "init", "mcmc"):
            block = asdict(getattr(self, name))
            out[name] = {
                k: (v.value if isinstance(v, Enum) else list(v) if isinstance(v, tuple) else v)
                for k, v in block.items()
                if v is not None
            }
        out["prior"] = self.prior.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any], env: bool = False) -> "RunConfig":
        """Validate a parsed TOML document; ``env`` enables environment overrides."""
        return _parse(data, env)


def load_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """
    Load config with precedence: env vars > config file > defaults.
    """
    data = load_config_file(Path(path) if path is not None else None)
    return _parse(data, env=True)


_BLOCKS: dict[str, type] = {
    "model": ModelConfig,
    "grid": GridConfig,
    "monte_carlo": MonteCarloConfig,
    "proposal": ProposalConfig,
    "eb": EBConfig,
    "init": InitConfig,
    "mcmc": McmcConfig,
}
_ENV = {
    "seed": "SEQEB_SEED",
    "workers": "SEQEB_WORKERS",
    "proposal.mode": "SEQEB_PROPOSAL_MODE",
}
_PRIOR_ALIASES = {"d0": "c0", "e0": "r0"}


def _float_tuple(value: Any) -> tuple[float, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    return (float(value),)


def _int_tuple(value: Any) -> tuple[int, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    return (int(value),)


def _str_tuple(value: Any) -> tuple[str, ...]:
    if isinstance(value, str):
        return (value,)
    return tuple(str(v) for v in value)


def _optional_float(value: Any) -> Optional[float]:
    return None if value is None else float(value)


_CONVERTERS: dict[str, Callable[[Any], Any]] = {
    "model.kernel": str,
    "model.family": str,
    "model.nugget": float,
    "model.covariates": _str_tuple,
    "model.reference": _float_tuple,
    "model.time_scale": float,
    "grid.fine_min": float,
    "grid.fine_max": float,
    "grid.fine_count": int,
    "grid.coarse": _float_tuple,
    "grid.reference": float,
    "monte_carlo.chains": _int_tuple,
    "monte_carlo.particles": int,
    "monte_carlo.gibbs_iters": int,
    "proposal.mode": ProposalMode,
    "proposal.newton_tol": float,
    "proposal.newton_max_iter": int,
    "proposal.max_halvings": int,
    "eb.estimator": EstimatorKind,
    "eb.ci_level": float,
    "eb.weight_ess_floor": float,
    "eb.rlr_tol": float,
    "init.alpha": float,
    "init.beta": _float_tuple,
    "init.sigma2": float,
    "mcmc.burn_in": int,
    "mcmc.thin": int,
    "mcmc.samples": int,
    "mcmc.phi_prior_mean": float,
    "mcmc.phi_step": float,
    "mcmc.x_step": float,
    "mcmc.accept_low": float,
    "mcmc.accept_high": float,
    "mcmc.adapt_every": int,
    "mcmc.fixed_alpha": _optional_float,
    "mcmc.fixed_sigma2": _optional_float,
    "mcmc.fixed_phi": _optional_float,
}


def _parse(data: dict[str, Any], env: bool) -> RunConfig:
    problems: list[str] = []
    known_top = {"seed", "workers", "prior", *_BLOCKS}
    for key in data:
        if key not in known_top:
            problems.append(f"unknown key '{key}'")

    def value(key: str, default: Any, conv: Callable[[Any], Any]) -> Any:
        raw = get_config_value(data, key, _ENV.get(key) if env else None, None)
        if raw is None:
            return default
        try:
            return conv(raw)
        except (TypeError, ValueError) as exc:
            problems.append(f"{key}: cannot use {raw!r} ({exc})")
            return default

    seed = value("seed", RunConfig.seed, int)
    workers = value("workers", RunConfig.workers, int)

    blocks: dict[str, Any] = {}
    for name, klass in _BLOCKS.items():
        section = data.get(name, {})
        if not isinstance(section, dict):
            problems.append(f"[{name}] must be a table")
            section = {}
        defaults = klass()
        fields = asdict(defaults)
        for key in section:
            if key not in fields:
                problems.append(f"unknown key '{name}.{key}'")
        kwargs = {
            key: value(f"{name}.{key}", getattr(defaults, key), _CONVERTERS[f"{name}.{key}"])
            for key in fields
        }
        blocks[name] = klass(**kwargs)

    prior_section = dict(data.get("prior", {}))
    for alias, target in _PRIOR_ALIASES.items():
        if alias in prior_section:
            if target in prior_section:
                problems.append(f"prior.{alias} and prior.{target} both given")
            prior_section[target] = prior_section.pop(alias)
    prior_fields = set(PriorHyper.__dataclass_fields__)
    for key in prior_section:
        if key not in prior_fields:
            problems.append(f"unknown key 'prior.{key}'")
    prior = PriorHyper()
    try:
        prior_kwargs = {k: v for k, v in prior_section.items() if k in prior_fields}
        if "b0" in prior_kwargs and isinstance(prior_kwargs["b0"], list):
            prior_kwargs["b0"] = np.asarray(prior_kwargs["b0"], dtype=float)
        prior = PriorHyper(**{k: (v if k == "b0" else float(v)) for k, v in prior_kwargs.items()})
    except (DomainError, TypeError, ValueError) as exc:
        problems.append(str(exc))

    config = RunConfig(seed=seed, workers=workers, prior=prior, **blocks)
    problems.extend(_validate(config))
    if problems:
        raise ConfigError("Invalid configuration", problems)
    return config


def _validate(config: RunConfig) -> list[str]:
    problems: list[str] = []
    if config.seed < 0:
        problems.append("seed must be a nonnegative integer")
    if config.workers < 1:
        problems.append("workers must be >= 1")
    model = config.model
    if model.kernel.lower() not in {k.value for k in KernelKind}:
        problems.append(f"model.kernel '{model.kernel}' is not supported (use 'exponential')")
    if model.family.lower() not in {"poisson", "gaussian"}:
        problems.append(f"model.family '{model.family}' is not supported (use 'poisson' or 'gaussian')")
    if model.nugget < 0:
        problems.append("model.nugget must be >= 0")
    valid_terms = {t.value for t in CovariateTerm}
    for term in model.covariates:
        if term.lower() not in valid_terms:
            problems.append(f"model.covariates: unknown term '{term}' (valid: {', '.join(sorted(valid_terms))})")
    if not model.covariates:
        problems.append("model.covariates must name at least one term")
    mc = config.monte_carlo
    if mc.particles < 1:
        problems.append("monte_carlo.particles must be >= 1")
    if mc.gibbs_iters < 1:
        problems.append("monte_carlo.gibbs_iters must be >= 1")
    prop = config.proposal
    if prop.newton_tol <= 0 or prop.newton_max_iter < 1 or prop.max_halvings < 0:
        problems.append("proposal: newton_tol > 0, newton_max_iter >= 1 and max_halvings >= 0 are required")
    if not 0.0 < config.eb.ci_level < 1.0:
        problems.append("eb.ci_level must lie in (0, 1)")
    if not 0.0 <= config.eb.weight_ess_floor <= 1.0:
        problems.append("eb.weight_ess_floor must lie in [0, 1]")
    if config.init.sigma2 <= 0:
        problems.append("init.sigma2 must be > 0")
    if len(config.init.beta) not in (1, config.m):
        problems.append(f"init.beta has {len(config.init.beta)} entries for {config.m} covariates")
    b0 = np.atleast_1d(np.asarray(config.prior.b0))
    if b0.size not in (1, config.m):
        problems.append(f"prior.b0 has {b0.size} entries for {config.m} covariates")
    mcmc = config.mcmc
    if mcmc.burn_in < 0 or mcmc.thin < 0:
        problems.append("mcmc.burn_in and mcmc.thin must be >= 0")
    if mcmc.samples < 1:
        problems.append("mcmc.samples must be >= 1")
    if not 0.0 < mcmc.accept_low < mcmc.accept_high < 1.0:
        problems.append("mcmc acceptance band must satisfy 0 < accept_low < accept_high < 1")
    if mcmc.phi_prior_mean <= 0 or mcmc.phi_step <= 0 or mcmc.x_step <= 0 or mcmc.adapt_every < 1:
        problems.append("mcmc.phi_prior_mean, phi_step, x_step must be > 0 and adapt_every >= 1")
    try:
        config.grid_spec()
    except ConfigError as exc:
        problems.extend(exc.problems or [str(exc)])
    return problems
