"""Replicated simulation studies and their aggregate tables.

Each study runs one function per replication seed and concatenates the
per-replication frames; replications run concurrently in a thread pool and
each draws its data from its own counter-based stream.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Union

import numpy as np
import pandas as pd
from scipy import stats

from seqeb.baseline.mcmc import run_offline
from seqeb.config import GridConfig, ProposalConfig, RunConfig
from seqeb.dataio.results import write_sidecar
from seqeb.errors import ConfigError
from seqeb.orchestrator.engine import SequentialEBEngine
from seqeb.orchestrator.rng import StreamTag, stream
from seqeb.orchestrator.state import RunState, StepSummary
from seqeb.proposal.fit import ProposalMode
from seqeb.simkit.scenario import Scenario, get_scenario, simplified_arm
from seqeb.simkit.simulate import SimulatedData, simulate

logger = logging.getLogger(__name__)

STUDIES = ("ess_comparison", "estimation", "simplified_bias", "long_run")
ESS_PHI = 0.4
SIMPLIFIED_REFERENCES = (0.395, 0.500, 0.710)
CHECK_TIMES = (20, 40, 60, 80, 100)


@dataclass(frozen=True)
class StudyScale:
    """Replication count and Monte Carlo sizes; ``mcmc_samples = 0`` skips the offline runs."""
    replications: int
    T: int
    chains: int
    particles: int = 100
    gibbs_iters: int = 50
    mcmc_samples: int = 0
    mcmc_thin: int = 1


_SCALES: dict[str, tuple[StudyScale, StudyScale]] = {
    "ess_comparison": (StudyScale(10, 100, 100), StudyScale(30, 100, 100)),
    "estimation": (
        StudyScale(10, 100, 500, mcmc_samples=500, mcmc_thin=2),
        StudyScale(100, 100, 500, mcmc_samples=3000, mcmc_thin=10),
    ),
    "simplified_bias": (StudyScale(10, 100, 100), StudyScale(30, 100, 100)),
    "long_run": (StudyScale(1, 100, 100), StudyScale(1, 1000, 100)),
}


def default_scale(study: str, full: bool = False) -> StudyScale:
    if study not in _SCALES:
        raise ConfigError(f"Unknown study: {study}. Available: {', '.join(STUDIES)}.")
    return _SCALES[study][1 if full else 0]


@dataclass(frozen=True, eq=False)
class StudyReport:
    study: str
    seeds: tuple[int, ...]
    scale: StudyScale
    tables: dict[str, pd.DataFrame]
    paths: tuple[Path, ...] = ()


def _scaled(scenario: Scenario, scale: StudyScale, seed: int) -> Scenario:
    return scenario.with_overrides(
        T=scale.T, chains=scale.chains, particles=scale.particles, gibbs_iters=scale.gibbs_iters, seed=seed
    )


def _data(scenario: Scenario, arm: int = 0) -> SimulatedData:
    return simulate(scenario, stream(scenario.seed, StreamTag.STUDY, arm, 0, 0))


def _trajectory(
    scenario: Scenario,
    config: RunConfig,
    data: SimulatedData,
    on_step: Optional[Callable[[RunState, StepSummary], None]] = None,
) -> pd.DataFrame:
    engine = SequentialEBEngine(scenario.model(config), config, workers=1)
    rows: list[dict[str, Any]] = []
    engine.on_step.append(lambda _run, summary: rows.append(summary.row() | {"delta2": summary.mean_delta2}))
    if on_step is not None:
        engine.on_step.append(on_step)
    engine.run(data.batches())
    return pd.DataFrame(rows)


def _ess_comparison(seed: int, scale: StudyScale) -> dict[str, pd.DataFrame]:
    scenario = _scaled(get_scenario("default"), scale, seed)
    data = _data(scenario)
    single = GridConfig(fine_min=ESS_PHI, fine_max=ESS_PHI, fine_count=1, coarse=(ESS_PHI,), reference=ESS_PHI)
    frames = []
    for mode in ProposalMode:
        config = scenario.to_config(grid=single, proposal=ProposalConfig(mode=mode))
        frame = _trajectory(scenario, config, data)
        frames.append(
            pd.DataFrame(
                {
                    "mode": mode.value,
                    "t": frame["t"],
                    "ess_ratio": frame["mean_ess"] / scale.particles,
                    "delta2": frame["delta2"],
                }
            )
        )
    return {"ess": pd.concat(frames, ignore_index=True)}


def _offline_rows(scenario: Scenario, config: RunConfig, data: SimulatedData, scale: StudyScale) -> list[dict[str, Any]]:
    mcmc = replace(config.mcmc, samples=scale.mcmc_samples, thin=scale.mcmc_thin)
    model = scenario.model(config)
    rows = []
    for T_i in (t for t in CHECK_TIMES if t <= data.T):
        rng = stream(scenario.seed, StreamTag.MCMC, 0, 0, T_i)
        result = run_offline(data.y[:T_i], model, mcmc, rng, tau=data.tau[:T_i], mask=data.mask[:T_i])
        row: dict[str, Any] = {"t": T_i, "source": "offline", "alpha": float(result.alpha.mean())}
        for i, b in enumerate(result.beta.mean(axis=0)):
            row[f"beta_{i}"] = float(b)
        row["sigma2"] = float(result.sigma2.mean())
        row["phi"] = result.phi_mode()
        rows.append(row)
    return rows


def _estimation(seed: int, scale: StudyScale) -> dict[str, pd.DataFrame]:
    scenario = _scaled(get_scenario("estimation"), scale, seed)
    config = scenario.to_config()
    data = _data(scenario)
    trajectory = _trajectory(scenario, config, data)
    params = ["t", "alpha", *[c for c in trajectory if c.startswith("beta_")], "sigma2", "phi"]
    online = trajectory.loc[trajectory["t"].isin(CHECK_TIMES), params].assign(source="online")
    boxplot = [online]
    if scale.mcmc_samples > 0:
        boxplot.append(pd.DataFrame(_offline_rows(scenario, config, data, scale)))
    return {"trajectories": trajectory, "boxplot": pd.concat(boxplot, ignore_index=True)}


def _simplified_bias(seed: int, scale: StudyScale) -> dict[str, pd.DataFrame]:
    scenario = _scaled(get_scenario("default"), scale, seed)
    data = _data(scenario)
    base = scenario.to_config()
    # Every arm gets the mixture estimator's total chain budget.
    total = scale.chains * len(base.grid.coarse)
    arms = [("mixture", base)]
    arms += [(f"simplified_{ref:.3f}", simplified_arm(base, ref, total)) for ref in SIMPLIFIED_REFERENCES]
    frames = [_trajectory(scenario, config, data).assign(arm=name) for name, config in arms]
    return {"trajectories": pd.concat(frames, ignore_index=True)}


def _long_run(seed: int, scale: StudyScale) -> dict[str, pd.DataFrame]:
    scenario = _scaled(get_scenario("long_run"), scale, seed)
    config = scenario.to_config()
    data = _data(scenario)
    snapshots = {max(1, scale.T * q // 4) for q in (1, 2, 3, 4)}
    nbytes: list[int] = []
    curves: list[dict[str, Any]] = []

    def record(run: RunState, summary: StepSummary) -> None:
        nbytes.append(run.nbytes)
        if summary.t in snapshots:
            curves.extend(summary.table.rows())

    trajectory = _trajectory(scenario, config, data, on_step=record)
    steps = trajectory[["t", "step_seconds", "phi", "mean_ess"]].assign(nbytes=nbytes)
    return {"steps": steps, "bf_curves": pd.DataFrame(curves)}


def _cost(steps: pd.DataFrame) -> pd.DataFrame:
    rows = []
    for seed, group in steps.groupby("replication"):
        fit = stats.linregress(group["t"], group["step_seconds"])
        mean = float(group["step_seconds"].mean())
        rows.append(
            {
                "replication": seed,
                "slope": fit.slope,
                "intercept": fit.intercept,
                "slope_stderr": fit.stderr,
                "pvalue": fit.pvalue,
                "mean_step_seconds": mean,
                "relative_slope": fit.slope / mean if mean > 0 else np.nan,
                "nbytes_first": int(group["nbytes"].iloc[0]),
                "nbytes_last": int(group["nbytes"].iloc[-1]),
            }
        )
    return pd.DataFrame(rows)


def _paired(ess: pd.DataFrame) -> pd.DataFrame:
    """Per-replication mean ESS/N differences against the plain Gaussian proposal."""
    per_rep = ess.groupby(["replication", "mode"])["ess_ratio"].mean().unstack("mode")
    rows = []
    for mode in (ProposalMode.MEAN_ONLY.value, ProposalMode.MEAN_SKEW.value):
        diff = (per_rep[mode] - per_rep[ProposalMode.GAUSSIAN.value]).to_numpy()
        mean = float(diff.mean())
        if diff.size > 1:
            half = float(stats.t.ppf(0.975, diff.size - 1) * diff.std(ddof=1) / np.sqrt(diff.size))
        else:
            half = np.nan
        rows.append({"mode": mode, "baseline": ProposalMode.GAUSSIAN.value, "mean_diff": mean, "ci_lo": mean - half, "ci_hi": mean + half})
    return pd.DataFrame(rows)


def _aggregate(study: str, tables: dict[str, pd.DataFrame]) -> dict[str, pd.DataFrame]:
    if study == "ess_comparison":
        ess = tables["ess"]
        per_rep = ess.groupby(["mode", "replication"]).agg(ess_ratio=("ess_ratio", "mean"), delta2_mean=("delta2", "mean"), delta2_max=("delta2", "max"))
        tables["summary"] = per_rep.groupby("mode").agg(["mean", "std"]).reset_index()
        tables["summary"].columns = ["_".join(c).rstrip("_") for c in tables["summary"].columns.to_flat_index()]
        tables["paired"] = _paired(ess)
    elif study == "estimation":
        traj = tables["trajectories"]
        tables["summary"] = traj[traj["t"] == traj["t"].max()].drop(columns="replication").mean(numeric_only=True).to_frame().T
    elif study == "simplified_bias":
        traj = tables["trajectories"]
        cols = [c for c in traj if c == "alpha" or c.startswith("beta_") or c in ("sigma2", "phi")]
        tables["curves"] = traj.groupby(["arm", "t"])[cols].mean().reset_index()
        tables["summary"] = tables["curves"].loc[tables["curves"].groupby("arm")["t"].idxmax()].reset_index(drop=True)
    elif study == "long_run":
        tables["cost"] = _cost(tables["steps"])
    return tables


_RUNNERS: dict[str, Callable[[int, StudyScale], dict[str, pd.DataFrame]]] = {
    "ess_comparison": _ess_comparison,
    "estimation": _estimation,
    "simplified_bias": _simplified_bias,
    "long_run": _long_run,
}


def replicate_study(
    study: str,
    seeds: Optional[Iterable[int]] = None,
    full: bool = False,
    out_dir: Optional[Union[str, Path]] = None,
    workers: int = 1,
    scale: Optional[StudyScale] = None,
) -> StudyReport:
    """Run ``study`` once per seed and aggregate the tables.

    Args:
        study: one of ``STUDIES``.
        seeds: replication seeds; ``1..replications`` by default.
        full: use the full-size replication counts and Monte Carlo sizes.
        out_dir: write ``<study>_<table>.csv`` files with JSON sidecars here.
        workers: replications run concurrently on this many threads.
        scale: explicit sizes, overriding ``full``.
    """
    scale = scale or default_scale(study, full)
    runner = _RUNNERS.get(study)
    if runner is None:
        raise ConfigError(f"Unknown study: {study}. Available: {', '.join(STUDIES)}.")
    seeds = tuple(int(s) for s in (seeds if seeds is not None else range(1, scale.replications + 1)))
    logger.info("study %s: %d replications (T=%d, L=%d, N=%d)", study, len(seeds), scale.T, scale.chains, scale.particles)

    def one(seed: int) -> dict[str, pd.DataFrame]:
        out = runner(seed, scale)
        logger.info("study %s: replication %d done", study, seed)
        return {name: frame.assign(replication=seed) for name, frame in out.items()}

    if workers > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, seeds))
    else:
        results = [one(s) for s in seeds]

    tables = {name: pd.concat([r[name] for r in results], ignore_index=True) for name in results[0]}
    tables = _aggregate(study, tables)
    paths: tuple[Path, ...] = ()
    if out_dir is not None:
        paths = write_report(study, seeds, scale, tables, out_dir)
    return StudyReport(study=study, seeds=seeds, scale=scale, tables=tables, paths=paths)


def write_report(
    study: str,
    seeds: tuple[int, ...],
    scale: StudyScale,
    tables: dict[str, pd.DataFrame],
    out_dir: Union[str, Path],
) -> tuple[Path, ...]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, frame in tables.items():
        path = out_dir / f"{study}_{name}.csv"
        frame.to_csv(path, index=False)
        write_sidecar(path, study, extra={"seeds": list(seeds), "scale": asdict(scale), "table": name})
        paths.append(path)
    return tuple(paths)


__all__ = [
    "STUDIES",
    "StudyReport",
    "StudyScale",
    "default_scale",
    "replicate_study",
    "write_report",
]
