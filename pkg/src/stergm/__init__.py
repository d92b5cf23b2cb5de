"""Separable temporal ERGMs: discrete-time network evolution with
conditionally independent formation and dissolution phases, estimated by
MCMC conditional maximum likelihood from observed network panels."""

from .network import (
    DyadCovariate,
    Network,
    NetworkError,
    NodeCovariate,
    TransitionDecomposition,
    apply_transition,
    decompose_transition,
)
from .series import NetworkSeries, load_series, save_series
from .terms import ModelContext, TermSpec, build_terms
from .model import ModelSpec, parse_model_file, parse_term
from .sampler import (
    DISSOLUTION,
    FORMATION,
    PhaseSpace,
    SamplerConfig,
    sample_phase,
    simulate_series,
    simulate_step,
)
from .exact import enumerate_phase, exact_loglik
from .estimation import (
    FitConfig,
    FitResult,
    bridge_deviance,
    cmle_fit,
    deviance_analysis,
    fit_time_heterogeneous,
    format_deviance,
    format_estimates,
)

__version__ = "0.1.0"

__all__ = [
    "Network",
    "NetworkError",
    "NodeCovariate",
    "DyadCovariate",
    "TransitionDecomposition",
    "decompose_transition",
    "apply_transition",
    "NetworkSeries",
    "load_series",
    "save_series",
    "TermSpec",
    "ModelContext",
    "build_terms",
    "ModelSpec",
    "parse_model_file",
    "parse_term",
    "FORMATION",
    "DISSOLUTION",
    "SamplerConfig",
    "PhaseSpace",
    "sample_phase",
    "simulate_step",
    "simulate_series",
    "enumerate_phase",
    "exact_loglik",
    "FitConfig",
    "FitResult",
    "cmle_fit",
    "fit_time_heterogeneous",
    "bridge_deviance",
    "deviance_analysis",
    "format_estimates",
    "format_deviance",
]
