"""Gaussian model of tripartite CV entanglement stored in three atomic memories."""

from .config import ConfigError, ExperimentSpec, MCSettings
from .criteria import (
    CriterionResult,
    GainTriple,
    closed_form_I,
    evaluate_criteria,
    numeric_optimal_gain,
    optimal_gain,
    table1_report,
    to_dB,
)
from .gaussian import GaussianChannel, GaussianState, SymplecticOp, vacuum_state
from .network import Stage, StageState, build_input_state, run_pipeline

__all__ = [
    "ConfigError", "ExperimentSpec", "MCSettings", "CriterionResult", "GainTriple", "closed_form_I",
    "evaluate_criteria", "numeric_optimal_gain", "optimal_gain", "table1_report", "to_dB",
    "GaussianChannel", "GaussianState", "SymplecticOp", "vacuum_state", "Stage", "StageState",
    "build_input_state", "run_pipeline",
]
