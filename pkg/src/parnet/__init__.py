"""Parallel-block neural network regression with a data-driven GD schedule."""

__version__ = "0.1.0"

from .network import (
    Architecture,
    InitBounds,
    WeightVector,
    forward,
    forward_batch,
    init_weights,
    param_count,
    predict_truncated,
    predict_truncated_batch,
    truncation_bound,
)
from .risk import Dataset, empirical_risk, fd_gradient, gradient, value_and_gradient
from .selection import SelectionResult, SplitSpec, split_select
from .simulation import (
    ExperimentSummary,
    generate_dataset,
    l2_error,
    mc_l2_error,
    noise_scale,
    run_experiment,
    sample_covariates,
    summarize,
    true_regression,
)
from .training import (
    DivergenceError,
    ScheduleConfig,
    ScheduleOutcome,
    adaptive_fit,
    check_conditions,
    gd_run,
)

__all__ = [
    "Architecture",
    "InitBounds",
    "WeightVector",
    "Dataset",
    "DivergenceError",
    "ExperimentSummary",
    "ScheduleConfig",
    "ScheduleOutcome",
    "SelectionResult",
    "SplitSpec",
    "adaptive_fit",
    "check_conditions",
    "empirical_risk",
    "fd_gradient",
    "forward",
    "forward_batch",
    "generate_dataset",
    "gd_run",
    "gradient",
    "init_weights",
    "l2_error",
    "mc_l2_error",
    "noise_scale",
    "param_count",
    "predict_truncated",
    "predict_truncated_batch",
    "run_experiment",
    "sample_covariates",
    "split_select",
    "summarize",
    "true_regression",
    "truncation_bound",
    "value_and_gradient",
]
