"""Sequential empirical Bayes estimation of the range parameter."""
from seqeb.eb.bayes_factor import mixture_bayes_factor, simplified_bayes_factor
from seqeb.eb.estimate import (
    BayesFactorTable,
    EBEstimate,
    credible_interval,
    estimate_phi,
    reweight_and_estimate,
)
from seqeb.eb.grid import GridSpec
from seqeb.eb.reverse_logistic import ReverseLogisticResult, reverse_logistic_fit

__all__ = [
    "BayesFactorTable",
    "EBEstimate",
    "GridSpec",
    "ReverseLogisticResult",
    "credible_interval",
    "estimate_phi",
    "mixture_bayes_factor",
    "reverse_logistic_fit",
    "simplified_bayes_factor",
]
