"""Kernels, Gaussian machinery, observation models and spatial prediction."""
from seqeb.spatial.covariates import CovariateBuilder, CovariateTerm
from seqeb.spatial.factory import create_family, create_kernel
from seqeb.spatial.gaussian import GaussianFactorization, factorize, mvn_logpdf, mvn_sample
from seqeb.spatial.kernels import (
    CorrelationKernel,
    ExponentialKernel,
    KernelKind,
    SiteSet,
    build_correlation,
    cross_correlation,
)
from seqeb.spatial.observation import (
    GaussianFamily,
    ObservationBatch,
    ObservationFamily,
    ObservationModel,
    PoissonFamily,
    batch_loglik,
    obs_loglik,
)
from seqeb.spatial.prediction import ConditionalField, conditional_field, predict_unmonitored

__all__ = [
    "ConditionalField",
    "CorrelationKernel",
    "CovariateBuilder",
    "CovariateTerm",
    "ExponentialKernel",
    "GaussianFactorization",
    "GaussianFamily",
    "KernelKind",
    "ObservationBatch",
    "ObservationFamily",
    "ObservationModel",
    "PoissonFamily",
    "SiteSet",
    "batch_loglik",
    "build_correlation",
    "conditional_field",
    "create_family",
    "create_kernel",
    "cross_correlation",
    "factorize",
    "mvn_logpdf",
    "mvn_sample",
    "obs_loglik",
    "predict_unmonitored",
]
