"""Latent Markov models for longitudinal categorical data."""

from ._core import (
    Dataset,
    DataError,
    FitFailure,
    FitResult,
    LMError,
    ModelSpec,
    Parameters,
    ZeroProbabilityPattern,
    __doc__,
    __version__,
    count_free_parameters,
    criteria,
    criterion_names,
    dataset_entropies,
    entropy,
    fit,
    log_likelihood,
    log_manifest_probability,
    parameters_from_json,
    posteriors,
    read_dataset,
    scenario,
    select,
    simulate,
    simulate_from,
    uniform_parameters,
)

__all__ = [
    "Dataset",
    "DataError",
    "FitFailure",
    "FitResult",
    "LMError",
    "ModelSpec",
    "Parameters",
    "ZeroProbabilityPattern",
    "__doc__",
    "__version__",
    "count_free_parameters",
    "criteria",
    "criterion_names",
    "dataset_entropies",
    "entropy",
    "fit",
    "log_likelihood",
    "log_manifest_probability",
    "parameters_from_json",
    "posteriors",
    "read_dataset",
    "scenario",
    "select",
    "simulate",
    "simulate_from",
    "uniform_parameters",
]
