"""Synthetic scenarios, forward simulation, quadrature oracles and replicated studies."""
from seqeb.simkit.oracle import (
    QuadratureSpec,
    conditional_marginal_loglik,
    oracle_log_bayes_factors,
    oracle_marginal_loglik,
)
from seqeb.simkit.scenario import SCENARIOS, Scenario, get_scenario, simplified_arm
from seqeb.simkit.simulate import CANONICAL_COLUMNS, SimulatedData, simulate
from seqeb.simkit.studies import STUDIES, StudyReport, StudyScale, default_scale, replicate_study

__all__ = [
    "CANONICAL_COLUMNS",
    "QuadratureSpec",
    "SCENARIOS",
    "STUDIES",
    "Scenario",
    "SimulatedData",
    "StudyReport",
    "StudyScale",
    "conditional_marginal_loglik",
    "default_scale",
    "get_scenario",
    "oracle_log_bayes_factors",
    "oracle_marginal_loglik",
    "replicate_study",
    "simplified_arm",
    "simulate",
]
