"""Nonnegative least-mean-fourth adaptive filtering: algorithm, analytical model, simulations."""

__version__ = "0.1.0"

from .filters import FilterState, StepRecord, nnlmf_step, nnlms_step, run_filter
from .montecarlo import EnsembleConfig, EnsembleResult, compare_model_vs_simulation, run_ensemble, to_db
from .signals import (
    PAPER_PSI0,
    PAPER_W_STAR,
    InputModel,
    NoiseModel,
    SystemModel,
    correlation_matrix,
    desired_response,
    generate_input_sequence,
    generate_noise_sequence,
    noise_moments,
    snr_db,
)
from .stability import classify_cell, solve_scaling, sweep
from .theory import (
    TheoryConfig,
    TheoryState,
    covariance_step,
    emse,
    fixed_points,
    mean_step,
    mean_step_white,
    phi1,
    phi2,
    predict_curves,
)

__all__ = [
    "FilterState", "StepRecord", "nnlmf_step", "nnlms_step", "run_filter",
    "EnsembleConfig", "EnsembleResult", "compare_model_vs_simulation", "run_ensemble", "to_db",
    "PAPER_PSI0", "PAPER_W_STAR", "InputModel", "NoiseModel", "SystemModel", "correlation_matrix",
    "desired_response", "generate_input_sequence", "generate_noise_sequence", "noise_moments", "snr_db",
    "classify_cell", "solve_scaling", "sweep",
    "TheoryConfig", "TheoryState", "covariance_step", "emse", "fixed_points", "mean_step",
    "mean_step_white", "phi1", "phi2", "predict_curves",
]
